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

#include "dsgd/distillation.hpp"
#include "dsgd/model.hpp"
#include "dsgd/semi_supervised.hpp"

namespace dsgd {

enum class RowKind { kCurrentLabeled, kCurrentUnlabeled, kReplayLabeled, kReplayUnlabeled };

inline bool is_replay(RowKind k) {
  return k == RowKind::kReplayLabeled || k == RowKind::kReplayUnlabeled;
}
inline bool is_unlabeled(RowKind k) {
  return k == RowKind::kCurrentUnlabeled || k == RowKind::kReplayUnlabeled;
}

struct BatchRow {
  RowKind kind = RowKind::kCurrentUnlabeled;
  // True class for labeled rows, pseudo-class for replayed unlabeled rows,
  // -1 otherwise.
  int label = -1;
  // Prediction recorded when a replayed exemplar was stored.
  Eigen::RowVectorXd stored_prediction;
  // Only filled for the ground-truth distillation probe.
  int probe_label = -1;
};

// One merged step: weak and strong views of the same rows.
struct TrainingBatch {
  Matrix weak;
  Matrix strong;
  std::vector<BatchRow> rows;

  std::vector<int> replay_positions() const;
};

enum class DistillScope { kLabeled, kAll, kGroundTruth };

struct LossWeights {
  double ssl = 1.0;    // lambda_1
  double logit = 1.0;  // lambda_2
  double sgd = 10.0;   // lambda_sgd
};

struct ObjectiveConfig {
  LossWeights weights;
  bool use_ce = true;
  bool use_ssl = true;
  bool use_logit_distill = false;
  bool use_pse_dis = false;
  bool use_sgd = false;
  // Replayed unlabeled exemplars also enter the cross-entropy with their
  // stored pseudo-labels.
  bool replay_pseudo_ce = true;
  DistillScope scope = DistillScope::kAll;
  double tau = kDefaultTau;
  double gamma = kDefaultGamma;
  int order = kDefaultOrder;

  void validate() const;
};

struct LossBundle {
  double ce = 0.0;
  double ssl = 0.0;
  double logit_distill = 0.0;
  double sgd = 0.0;
  double total = 0.0;
  LossWeights weights;
  int confident_rows = 0;
};

struct LossResult {
  LossBundle losses;
  ModelParams grads;
};

struct BceResult {
  double loss = 0.0;
  Matrix grad_logits;  // only the first targets.cols() columns are nonzero
};

// Mean binary cross-entropy between sigmoid(new_logits[:, :C]) and fixed
// targets of width C.
BceResult bce_to_targets(const Matrix& targets, const Matrix& new_logits);

// iCaRL-style: targets are sigmoid(old_logits); old side is constant.
BceResult logit_distill_loss(const Matrix& old_logits, const Matrix& new_logits);

// Cross-entropy plus the SSL, logit-distillation and sub-graph terms for one
// merged batch. old_model is null on the first task; task is 1-based and
// drives the pseudo-label ensemble weight.
LossResult total_loss(const ModelParams& params, const TrainingBatch& batch,
                      const ModelParams* old_model, int task, const ObjectiveConfig& config);

}  // namespace dsgd
