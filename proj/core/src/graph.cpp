// Copyright 2026 The dsgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dsgd/graph.hpp"

#include <cmath>
#include <string>

#include "dsgd/errors.hpp"

namespace dsgd {

EmbeddingMatrix::EmbeddingMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InvalidInput("embedding matrix must be at least 1x1, got " +
                       std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
  }
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if (!data_.row(i).allFinite()) {
      throw InvalidInput("embedding row " + std::to_string(i) + " has a non-finite entry");
    }
  }
}

TopologyGraph TopologyGraph::from_transition(Matrix transition, double gamma) {
  if (transition.rows() != transition.cols() || transition.rows() < 1) {
    throw InvalidInput("transition matrix must be square and nonempty");
  }
  if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  for (Eigen::Index j = 0; j < transition.cols(); ++j) {
    if (!transition.col(j).allFinite() || transition.col(j).minCoeff() < 0.0) {
      throw InvalidInput("transition column " + std::to_string(j) +
                         " has a negative or non-finite entry");
    }
    if (std::abs(transition.col(j).sum() - 1.0) > 1e-9) {
      throw InvalidInput("transition column " + std::to_string(j) + " does not sum to 1");
    }
  }
  return TopologyGraph(std::move(transition), gamma);
}

namespace {

void normalize_rows(const Matrix& z, Matrix& zhat, Vector& norms) {
  zhat.resize(z.rows(), z.cols());
  norms.resize(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = std::max(z.row(i).norm(), kNormFloor);
    norms[i] = n;
    zhat.row(i) = z.row(i) / n;
  }
}

Matrix mirrored_gram(const Matrix& zhat, const Vector& norms) {
  const Eigen::Index n = zhat.rows();
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = norms[i] > kNormFloor ? 1.0 : zhat.row(i).squaredNorm();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = zhat.row(i).dot(zhat.row(j));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

Matrix column_softmax(const Matrix& a, double gamma) {
  Matrix p(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double mx = a.col(j).maxCoeff();
    p.col(j) = ((a.col(j).array() - mx) / gamma).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

}  // namespace

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& z) {
  Matrix zhat;
  Vector norms;
  normalize_rows(z.data(), zhat, norms);
  return SimilarityMatrix{mirrored_gram(zhat, norms)};
}

TopologyGraph transition_matrix(const SimilarityMatrix& a, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidParameter("gamma must be a positive finite number, got " + std::to_string(gamma));
  }
  if (!a.data.allFinite()) throw InvalidInput("similarity matrix has non-finite entries");
  return TopologyGraph(column_softmax(a.data, gamma), gamma);
}

TopologyGraph build_graph(const EmbeddingMatrix& z, double gamma) {
  return transition_matrix(similarity_matrix(z), gamma);
}

GraphTape build_graph_taped(const EmbeddingMatrix& z, double gamma) {
  GraphTape tape;
  normalize_rows(z.data(), tape.normalized, tape.norms);
  SimilarityMatrix a{mirrored_gram(tape.normalized, tape.norms)};
  tape.transition = transition_matrix(a, gamma).transition();
  tape.gamma = gamma;
  return tape;
}

Matrix graph_backward(const GraphTape& tape, const Matrix& grad_transition) {
  const Matrix& p = tape.transition;
  const Eigen::Index n = p.rows();

  // Column softmax: dA_ij = P_ij (dP_ij - sum_i' P_i'j dP_i'j) / gamma.
  Matrix grad_sim(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double inner = p.col(j).dot(grad_transition.col(j));
    grad_sim.col(j) = p.col(j).cwiseProduct(grad_transition.col(j).array().matrix() -
                                            Vector::Constant(n, inner)) /
                      tape.gamma;
  }

  Matrix sym = grad_sim + grad_sim.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    // A diagonal pinned to 1 is constant in Z.
    if (tape.norms[i] > kNormFloor) sym(i, i) = 0.0;
  }
  const Matrix grad_hat = sym * tape.normalized;

  Matrix grad_z(n, tape.normalized.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (tape.norms[i] > kNormFloor) {
      const double proj = tape.normalized.row(i).dot(grad_hat.row(i));
      grad_z.row(i) = (grad_hat.row(i) - proj * tape.normalized.row(i)) / tape.norms[i];
    } else {
      grad_z.row(i) = grad_hat.row(i) / kNormFloor;
    }
  }
  return grad_z;
}

}  // namespace dsgd
