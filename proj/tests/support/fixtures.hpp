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

#include <functional>
#include <random>
#include <vector>

#include "dsgd/model.hpp"
#include "dsgd/objective.hpp"
#include "support/oracles.hpp"

namespace fixture {

using namespace dsgd;

struct Instance {
  ModelParams model;
  ModelParams old_model;
  TrainingBatch batch;
};

// Merged batch of n rows whose last r rows are replay. Kinds cycle so that
// every row kind appears once n and r allow it. The old model has old_c
// classes, the new one old_c + 2.
inline Instance random_instance(std::uint64_t seed, int n, int r, int d_in, int hidden, int d_emb,
                                int old_c = 2) {
  Rng rng(seed);
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  Instance inst;
  inst.old_model = init_model(d_in, hidden, d_emb, old_c, rng);
  inst.model = expand_head(inst.old_model, 2, rng);
  // Move the new model away from the old one so the sub-graph term is live.
  for (Matrix* t : inst.model.tensors()) *t += 0.3 * oracle::random_matrix(int(t->rows()), int(t->cols()), gen);
  inst.batch.weak = oracle::random_matrix(n, d_in, gen);
  inst.batch.strong = inst.batch.weak + 0.3 * oracle::random_matrix(n, d_in, gen);
  std::uniform_int_distribution<int> old_class(0, old_c - 1);
  std::uniform_int_distribution<int> new_class(old_c, old_c + 1);
  for (int i = 0; i < n; ++i) {
    BatchRow row;
    if (i >= n - r) {
      row.kind = ((i - (n - r)) % 2 == 0) ? RowKind::kReplayLabeled : RowKind::kReplayUnlabeled;
      row.label = old_class(gen);
      row.stored_prediction = softmax_rows(2.0 * oracle::random_matrix(1, old_c, gen)).row(0);
      if (row.kind == RowKind::kReplayUnlabeled) row.probe_label = old_class(gen);
    } else {
      row.kind = (i % 2 == 0) ? RowKind::kCurrentLabeled : RowKind::kCurrentUnlabeled;
      row.label = row.kind == RowKind::kCurrentLabeled ? new_class(gen) : -1;
    }
    inst.batch.rows.push_back(row);
  }
  return inst;
}

// Every parameter flattened in tensor order.
inline Eigen::VectorXd flatten(const ModelParams& p) {
  Eigen::VectorXd out(p.parameter_count());
  Eigen::Index k = 0;
  for (const Matrix* t : p.tensors())
    for (Eigen::Index i = 0; i < t->size(); ++i) out[k++] = t->data()[i];
  return out;
}

// Central differences of f over every parameter of p.
inline Eigen::VectorXd parameter_fd(const std::function<double(const ModelParams&)>& f, ModelParams p,
                                    double h = 1e-5) {
  Eigen::VectorXd out(p.parameter_count());
  Eigen::Index k = 0;
  for (Matrix* t : p.tensors())
    for (Eigen::Index i = 0; i < t->size(); ++i) {
      double& v = t->data()[i];
      const double keep = v;
      v = keep + h;
      const double up = f(p);
      v = keep - h;
      const double down = f(p);
      v = keep;
      out[k++] = (up - down) / (2.0 * h);
    }
  return out;
}

inline ObjectiveConfig everything_on(double tau = 0.3, int order = 3) {
  ObjectiveConfig c;
  c.use_ce = true;
  c.use_ssl = true;
  c.use_logit_distill = true;
  c.use_pse_dis = true;
  c.use_sgd = true;
  c.tau = tau;
  c.order = order;
  c.weights = LossWeights{0.7, 1.3, 10.0};
  return c;
}

}  // namespace fixture
