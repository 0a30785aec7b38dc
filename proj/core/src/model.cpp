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

#include "dsgd/model.hpp"

#include <cmath>
#include <string>

#include "dsgd/errors.hpp"

namespace dsgd {

namespace {

Dense init_dense(int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Dense d{Matrix(out, in), Matrix::Zero(1, out)};
  for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.weight.cols(); ++j) d.weight(i, j) = dist(rng);
  }
  return d;
}

Matrix affine(const Dense& d, const Matrix& x) {
  Matrix y = x * d.weight.transpose();
  y.rowwise() += d.bias.row(0);
  return y;
}

void affine_backward(const Dense& d, const Matrix& input, const Matrix& grad_out, Dense& grad,
                     Matrix* grad_input) {
  grad.weight.noalias() += grad_out.transpose() * input;
  grad.bias.row(0) += grad_out.colwise().sum();
  if (grad_input) *grad_input = grad_out * d.weight;
}

}  // namespace

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (Matrix* t : z.tensors()) t->setZero();
  return z;
}

bool ModelParams::all_finite() const {
  for (const Matrix* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

Eigen::Index ModelParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const Matrix* t : tensors()) n += t->size();
  return n;
}

ModelParams init_model(int input_dim, int hidden_dim, int embedding_dim, int classes, Rng& rng) {
  if (input_dim < 1 || hidden_dim < 1 || embedding_dim < 1 || classes < 1) {
    throw InvalidParameter("model dimensions must be positive");
  }
  ModelParams p;
  p.hidden1 = init_dense(input_dim, hidden_dim, rng);
  p.hidden2 = init_dense(hidden_dim, hidden_dim, rng);
  p.embed = init_dense(hidden_dim, embedding_dim, rng);
  p.head = init_dense(embedding_dim, classes, rng);
  return p;
}

ModelParams expand_head(const ModelParams& params, int k_new, Rng& rng) {
  if (k_new < 1) throw InvalidParameter("head expansion needs k_new >= 1");
  const Dense extra = init_dense(params.embedding_dim(), k_new, rng);
  ModelParams out = params;
  const Eigen::Index c = params.classes();
  out.head.weight.resize(c + k_new, params.embedding_dim());
  out.head.weight.topRows(c) = params.head.weight;
  out.head.weight.bottomRows(k_new) = extra.weight;
  out.head.bias.resize(1, c + k_new);
  out.head.bias.leftCols(c) = params.head.bias;
  out.head.bias.rightCols(k_new).setZero();
  return out;
}

ForwardResult forward(const ModelParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim()) {
    throw AlignmentError("input width " + std::to_string(inputs.cols()) +
                         " does not match model input " + std::to_string(params.input_dim()));
  }
  if (!params.all_finite()) throw PoisonedState("model parameters are not finite");

  ForwardResult r;
  r.cache.input = inputs;
  r.cache.pre1 = affine(params.hidden1, inputs);
  r.cache.act1 = r.cache.pre1.cwiseMax(0.0);
  r.cache.pre2 = affine(params.hidden2, r.cache.act1);
  r.cache.act2 = r.cache.pre2.cwiseMax(0.0);
  r.embeddings = affine(params.embed, r.cache.act2);
  r.logits = affine(params.head, r.embeddings);
  r.cache.embeddings = r.embeddings;
  return r;
}

ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     const Matrix& grad_logits, const Matrix& grad_embeddings) {
  ModelParams g = params.zeros_like();
  const Eigen::Index m = cache.input.rows();
  Matrix grad_emb = Matrix::Zero(m, params.embedding_dim());
  if (grad_logits.size() > 0) {
    affine_backward(params.head, cache.embeddings, grad_logits, g.head, &grad_emb);
  }
  if (grad_embeddings.size() > 0) grad_emb += grad_embeddings;

  Matrix grad_act2;
  affine_backward(params.embed, cache.act2, grad_emb, g.embed, &grad_act2);
  const Matrix grad_pre2 = grad_act2.cwiseProduct((cache.pre2.array() > 0.0).cast<double>().matrix());
  Matrix grad_act1;
  affine_backward(params.hidden2, cache.act1, grad_pre2, g.hidden2, &grad_act1);
  const Matrix grad_pre1 = grad_act1.cwiseProduct((cache.pre1.array() > 0.0).cast<double>().matrix());
  affine_backward(params.hidden1, cache.input, grad_pre1, g.hidden1, nullptr);
  return g;
}

void add_into(ModelParams& acc, const ModelParams& other) {
  auto dst = acc.tensors();
  auto src = other.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
}

namespace {

void check_same_shapes(const ModelParams& a, const ModelParams& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols()) {
      throw AlignmentError("gradient shape mismatch in " +
                           std::string(ModelParams::kTensorNames[i]));
    }
  }
}

}  // namespace

ModelParams sgd_step(const ModelParams& params, const ModelParams& grads, double lr) {
  check_same_shapes(params, grads);
  if (!grads.all_finite()) throw PoisonedState("gradients are not finite");
  ModelParams out = params;
  auto dst = out.tensors();
  auto src = grads.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] -= lr * *src[i];
  return out;
}

void MomentumSgd::step(ModelParams& params, const ModelParams& grads) {
  check_same_shapes(params, grads);
  if (!grads.all_finite()) throw PoisonedState("gradients are not finite");
  if (!has_velocity_ || velocity_.classes() != params.classes()) {
    velocity_ = params.zeros_like();
    has_velocity_ = true;
  }
  auto v = velocity_.tensors();
  auto g = grads.tensors();
  auto p = params.tensors();
  for (std::size_t i = 0; i < v.size(); ++i) {
    *v[i] = momentum_ * *v[i] + *g[i];
    *p[i] -= lr_ * *v[i];
  }
}

}  // namespace dsgd
