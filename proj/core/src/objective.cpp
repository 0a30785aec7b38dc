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

#include "dsgd/objective.hpp"

#include <cmath>
#include <string>

#include "dsgd/errors.hpp"

namespace dsgd {

std::vector<int> TrainingBatch::replay_positions() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (is_replay(rows[i].kind)) out.push_back(static_cast<int>(i));
  }
  return out;
}

void ObjectiveConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (order < 0) throw ConfigError("PPR order must be nonnegative");
  if (weights.ssl < 0.0 || weights.logit < 0.0 || weights.sgd < 0.0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  const bool any = use_ce || (use_ssl && weights.ssl > 0.0) ||
                   (use_logit_distill && weights.logit > 0.0) || (use_sgd && weights.sgd > 0.0);
  if (!any) throw ConfigError("every loss term is disabled");
}

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double mx = row.maxCoeff();
  return mx + std::log((row.array() - mx).exp().sum());
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace

BceResult bce_to_targets(const Matrix& targets, const Matrix& new_logits) {
  if (targets.rows() != new_logits.rows() || targets.cols() > new_logits.cols()) {
    throw AlignmentError("distillation targets do not align with the new logits");
  }
  BceResult out;
  out.grad_logits = Matrix::Zero(new_logits.rows(), new_logits.cols());
  if (targets.size() == 0) return out;
  const double count = static_cast<double>(targets.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
      const double z = new_logits(i, j);
      const double y = targets(i, j);
      // max(z,0) - z y + log(1 + exp(-|z|))
      total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      out.grad_logits(i, j) = (sigmoid(z) - y) / count;
    }
  }
  out.loss = total / count;
  return out;
}

BceResult logit_distill_loss(const Matrix& old_logits, const Matrix& new_logits) {
  if (old_logits.rows() != new_logits.rows() || old_logits.cols() > new_logits.cols()) {
    throw AlignmentError("old logits do not align with the new logits");
  }
  return bce_to_targets(old_logits.unaryExpr([](double z) { return sigmoid(z); }), new_logits);
}

LossResult total_loss(const ModelParams& params, const TrainingBatch& batch,
                      const ModelParams* old_model, int task, const ObjectiveConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(batch.rows.size());
  if (batch.weak.rows() != n || batch.strong.rows() != n) {
    throw AlignmentError("batch views and row descriptors differ in length");
  }

  LossBundle b;
  b.weights = config.weights;
  const ForwardResult weak = forward(params, batch.weak);
  const int classes = params.classes();
  Matrix grad_logits = Matrix::Zero(n, classes);
  Matrix grad_emb;

  if (config.use_ce) {
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      const BatchRow& r = batch.rows[static_cast<std::size_t>(i)];
      const bool labeled = r.kind == RowKind::kCurrentLabeled || r.kind == RowKind::kReplayLabeled;
      const bool pseudo = r.kind == RowKind::kReplayUnlabeled && config.replay_pseudo_ce;
      if ((labeled || pseudo) && r.label >= 0) {
        if (r.label >= classes) throw AlignmentError("label beyond the classifier head");
        rows.push_back(static_cast<int>(i));
      }
    }
    if (!rows.empty()) {
      const Matrix probs = softmax_rows(gather_rows(weak.logits, rows));
      const double count = static_cast<double>(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const int i = rows[k];
        const int y = batch.rows[static_cast<std::size_t>(i)].label;
        b.ce += log_sum_exp(weak.logits.row(i)) - weak.logits(i, y);
        grad_logits.row(i) += probs.row(static_cast<Eigen::Index>(k)) / count;
        grad_logits(i, y) -= 1.0 / count;
      }
      b.ce /= count;
    }
  }

  ModelParams strong_grads;
  bool have_strong = false;
  if (config.use_ssl && config.weights.ssl > 0.0) {
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_unlabeled(batch.rows[static_cast<std::size_t>(i)].kind)) rows.push_back(static_cast<int>(i));
    }
    if (!rows.empty()) {
      Matrix probs = softmax_rows(gather_rows(weak.logits, rows));
      const double alpha = alpha_schedule(task);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const BatchRow& r = batch.rows[static_cast<std::size_t>(rows[k])];
        if (r.kind == RowKind::kReplayUnlabeled && r.stored_prediction.size() > 0) {
          const auto row = static_cast<Eigen::Index>(k);
          probs.row(row) = ensemble_pseudo(r.stored_prediction, probs.row(row), alpha);
        }
      }
      const ForwardResult strong = forward(params, gather_rows(batch.strong, rows));
      const FixMatchResult fm = fixmatch_loss(probs, strong.logits, config.tau);
      b.ssl = fm.loss;
      b.confident_rows = fm.confident_rows;
      strong_grads = backward(params, strong.cache, config.weights.ssl * fm.grad_logits, Matrix());
      have_strong = true;
    }
  }

  const std::vector<int> replay = batch.replay_positions();
  const bool want_logit = config.use_logit_distill && config.weights.logit > 0.0;
  const bool want_sgd = config.use_sgd && config.weights.sgd > 0.0;
  if (old_model != nullptr && !replay.empty() && (want_logit || want_sgd)) {
    const ForwardResult old = forward(*old_model, gather_rows(batch.weak, replay));
    const int old_classes = old_model->classes();
    if (old_classes > classes) throw AlignmentError("previous model has a wider head");

    if (want_logit) {
      std::vector<int> rows;      // positions in the merged batch
      std::vector<int> old_rows;  // positions in old.logits
      for (std::size_t k = 0; k < replay.size(); ++k) {
        const RowKind kind = batch.rows[static_cast<std::size_t>(replay[k])].kind;
        if (config.scope == DistillScope::kLabeled && kind != RowKind::kReplayLabeled) continue;
        rows.push_back(replay[k]);
        old_rows.push_back(static_cast<int>(k));
      }
      if (!rows.empty()) {
        Matrix targets = gather_rows(old.logits, old_rows).unaryExpr([](double z) { return sigmoid(z); });
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const BatchRow& r = batch.rows[static_cast<std::size_t>(rows[k])];
          if (r.kind != RowKind::kReplayUnlabeled) continue;
          int hard = -1;
          if (config.scope == DistillScope::kGroundTruth) {
            hard = r.probe_label;
          } else if (config.use_pse_dis && r.stored_prediction.size() > 0) {
            hard = static_cast<int>(argmax(r.stored_prediction));
          }
          if (hard >= 0 && hard < old_classes) {
            const auto row = static_cast<Eigen::Index>(k);
            targets.row(row).setZero();
            targets(row, hard) = 1.0;
          }
        }
        const BceResult bce = bce_to_targets(targets, gather_rows(weak.logits, rows));
        b.logit_distill = bce.loss;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          grad_logits.row(rows[k]) += config.weights.logit * bce.grad_logits.row(static_cast<Eigen::Index>(k));
        }
      }
    }

    if (want_sgd) {
      const SgdLossResult sgd = sgd_loss_from_embeddings(
          EmbeddingMatrix(old.embeddings), EmbeddingMatrix(weak.embeddings), replay, config.gamma,
          config.order);
      b.sgd = sgd.loss;
      grad_emb = config.weights.sgd * sgd.grad;
    }
  }

  b.total = b.ce + config.weights.ssl * b.ssl + config.weights.logit * b.logit_distill +
            config.weights.sgd * b.sgd;

  LossResult out{b, backward(params, weak.cache, grad_logits, grad_emb)};
  if (have_strong) add_into(out.grads, strong_grads);
  return out;
}

}  // namespace dsgd
