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

#include <vector>

#include "dsgd/graph.hpp"

namespace dsgd {

inline constexpr int kDefaultOrder = 6;

// values(x, i) is the K-order PPR value from start i to target x.
// Identifiers name samples, not graph nodes, so sets built on two
// different graphs can be compared.
struct DistillationVectorSet {
  Matrix values;
  std::vector<int> start_ids;
  std::vector<int> target_ids;
  int order = 0;
};

// sum_{t=0..K} P^t e_s by repeated matrix-vector products.
Vector ppr_k(const TopologyGraph& g, int start, int order);

// Exhaustive walk enumeration. Refuses n > 8 or K > 5.
Vector brute_force_ppr(const TopologyGraph& g, int start, int order);

// All start columns are propagated together as one n x r block.
DistillationVectorSet distillation_vectors(const TopologyGraph& g, const std::vector<int>& starts,
                                           const std::vector<int>& targets, int order);

// Mean squared difference over all (target, start) pairs.
double sgd_loss(const DistillationVectorSet& old_set, const DistillationVectorSet& new_set);

struct SgdLossResult {
  double loss = 0.0;
  Matrix grad;  // dL/dZ_new, same shape as Z_new
};

// Old graph over the replayed samples' previous-model embeddings; new graph
// over the whole merged batch. Starts and targets are the replayed samples
// on both graphs. The old side is constant.
SgdLossResult sgd_loss_from_embeddings(const EmbeddingMatrix& z_old, const EmbeddingMatrix& z_new,
                                       const std::vector<int>& replay_positions, double gamma,
                                       int order);

}  // namespace dsgd
