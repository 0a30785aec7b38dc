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

#pragma once

#include "dsgd/linalg.hpp"

namespace dsgd {

inline constexpr double kNormFloor = 1e-12;
inline constexpr double kDefaultGamma = 1.0;

// n x d batch of sample representations. Construction rejects empty or
// non-finite data, naming the first offending row.
class EmbeddingMatrix {
 public:
  explicit EmbeddingMatrix(Matrix data);

  const Matrix& data() const { return data_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }

 private:
  Matrix data_;
};

// Symmetric cosine-similarity matrix of an embedding batch.
struct SimilarityMatrix {
  Matrix data;
};

// Column-stochastic random-walk matrix: column j is the step distribution
// out of vertex j.
class TopologyGraph {
 public:
  // Validates that every column sums to one within 1e-9 and entries are
  // nonnegative. Used for graphs supplied directly (tests, oracles).
  static TopologyGraph from_transition(Matrix transition, double gamma = kDefaultGamma);

  const Matrix& transition() const { return transition_; }
  double gamma() const { return gamma_; }
  Eigen::Index size() const { return transition_.rows(); }

 private:
  friend TopologyGraph transition_matrix(const SimilarityMatrix&, double);
  TopologyGraph(Matrix transition, double gamma)
      : transition_(std::move(transition)), gamma_(gamma) {}

  Matrix transition_;
  double gamma_;
};

// Rows are normalized by max(norm, 1e-12); the upper triangle is computed
// and mirrored so the result is exactly symmetric. Diagonal entries of
// rows with nonzero norm are exactly 1.
SimilarityMatrix similarity_matrix(const EmbeddingMatrix& z);

// P[i][j] = exp(A[i][j]/gamma) / sum_i' exp(A[i'][j]/gamma).
TopologyGraph transition_matrix(const SimilarityMatrix& a, double gamma);

TopologyGraph build_graph(const EmbeddingMatrix& z, double gamma = kDefaultGamma);

// Intermediates kept for the reverse pass through normalization,
// similarity and softmax.
struct GraphTape {
  Matrix normalized;  // Z-hat
  Vector norms;       // clamped row norms
  Matrix transition;  // P
  double gamma = kDefaultGamma;
};

GraphTape build_graph_taped(const EmbeddingMatrix& z, double gamma);

// Pulls dL/dP back to dL/dZ through the softmax, the similarity product and
// the row normalization.
Matrix graph_backward(const GraphTape& tape, const Matrix& grad_transition);

}  // namespace dsgd
