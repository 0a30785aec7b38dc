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

#include <array>
#include <string>
#include <string_view>

#include "dsgd/graph.hpp"
#include "dsgd/linalg.hpp"

namespace dsgd {

// y = x W^T + b, one sample per row.
struct Dense {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
};

// d_in -> h -> h -> d_emb with rectifiers after the two hidden layers,
// then a linear head d_emb -> C. The embedding layer is linear so its
// output is the representation the graphs are built on.
struct ModelParams {
  Dense hidden1;
  Dense hidden2;
  Dense embed;
  Dense head;

  int input_dim() const { return static_cast<int>(hidden1.weight.cols()); }
  int hidden_dim() const { return static_cast<int>(hidden1.weight.rows()); }
  int embedding_dim() const { return static_cast<int>(embed.weight.rows()); }
  int classes() const { return static_cast<int>(head.weight.rows()); }

  static constexpr std::array<std::string_view, 8> kTensorNames = {
      "hidden1.weight", "hidden1.bias", "hidden2.weight", "hidden2.bias",
      "embed.weight",   "embed.bias",   "head.weight",    "head.bias"};

  std::array<Matrix*, 8> tensors() {
    return {&hidden1.weight, &hidden1.bias, &hidden2.weight, &hidden2.bias,
            &embed.weight,   &embed.bias,   &head.weight,    &head.bias};
  }
  std::array<const Matrix*, 8> tensors() const {
    return {&hidden1.weight, &hidden1.bias, &hidden2.weight, &hidden2.bias,
            &embed.weight,   &embed.bias,   &head.weight,    &head.bias};
  }

  // Same shapes, all zeros. Used as a gradient accumulator.
  ModelParams zeros_like() const;
  bool all_finite() const;
  Eigen::Index parameter_count() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ModelParams init_model(int input_dim, int hidden_dim, int embedding_dim, int classes, Rng& rng);

// Appends k_new head rows drawn like init_model. Existing rows untouched.
ModelParams expand_head(const ModelParams& params, int k_new, Rng& rng);

// Activations kept for the reverse pass.
struct ForwardCache {
  Matrix input;
  Matrix pre1, act1;
  Matrix pre2, act2;
  Matrix embeddings;
};

struct ForwardResult {
  Matrix embeddings;
  Matrix logits;
  ForwardCache cache;

  EmbeddingMatrix embedding_matrix() const { return EmbeddingMatrix(embeddings); }
};

// Throws PoisonedState on non-finite parameters, AlignmentError on width.
ForwardResult forward(const ModelParams& params, const Matrix& inputs);

// Gradients for every tensor given upstream gradients on the logits and on
// the embeddings (either may be empty to mean zero).
ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     const Matrix& grad_logits, const Matrix& grad_embeddings);

// params - lr * grads.
ModelParams sgd_step(const ModelParams& params, const ModelParams& grads, double lr);

// Heavy-ball SGD: v = mu v + g; params -= lr v. Velocity is reset whenever
// the parameter shapes change (head expansion).
class MomentumSgd {
 public:
  MomentumSgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(ModelParams& params, const ModelParams& grads);
  void reset() { has_velocity_ = false; }

 private:
  double lr_;
  double momentum_;
  bool has_velocity_ = false;
  ModelParams velocity_;
};

void add_into(ModelParams& acc, const ModelParams& other);

// Versioned JSON checkpoint; layout documented in README.
std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(const std::string& text);

}  // namespace dsgd
