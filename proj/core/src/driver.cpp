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

#include "dsgd/driver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "dsgd/errors.hpp"

namespace dsgd {

namespace {

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
}

Matrix draw_cluster(const Vector& mean, int count, double spread, Rng& rng) {
  std::normal_distribution<double> noise(0.0, spread);
  Matrix out(count, mean.size());
  for (int i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < mean.size(); ++j) out(i, j) = mean[j] + noise(rng);
  }
  return out;
}

void append_rows(Matrix& dst, const Matrix& rows) {
  const Eigen::Index old = dst.rows();
  dst.conservativeResize(old + rows.rows(), rows.cols());
  dst.bottomRows(rows.rows()) = rows;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (argmax(logits.row(i)) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

TaskStream make_task_stream(const StreamSpec& spec, Rng& rng) {
  if (spec.tasks < 1 || spec.classes_per_task < 1) {
    throw InvalidParameter("stream needs at least one task and one class per task");
  }
  if (spec.input_dim < 2) throw InvalidParameter("input_dim must be at least 2");
  if (spec.train_per_class < 1 || spec.test_per_class < 1) {
    throw InvalidParameter("per-class sample counts must be positive");
  }
  if (!(spec.labeled_fraction > 0.0 && spec.labeled_fraction <= 1.0)) {
    throw InvalidParameter("labeled fraction must lie in (0, 1]");
  }
  if (!(spec.class_spread >= 0.0) || !(spec.radius > 0.0)) {
    throw InvalidParameter("class spread must be nonnegative and radius positive");
  }

  TaskStream stream;
  stream.spec = spec;
  const int total = spec.total_classes();
  for (int c = 0; c < total; ++c) {
    Vector mean = Vector::Zero(spec.input_dim);
    const double angle = 2.0 * std::numbers::pi * c / total;
    mean[0] = spec.radius * std::cos(angle);
    mean[1] = spec.radius * std::sin(angle);
    stream.class_means.push_back(mean);
  }

  int labeled_per_class =
      static_cast<int>(std::lround(spec.labeled_fraction * spec.train_per_class));
  if (labeled_per_class == 0) {
    labeled_per_class = 1;
    stream.warnings.push_back("labeled fraction gives no labels per class; forcing 1");
  }

  for (int t = 1; t <= spec.tasks; ++t) {
    Task task;
    task.index = t;
    task.labeled_inputs.resize(0, spec.input_dim);
    task.unlabeled_inputs.resize(0, spec.input_dim);
    task.test_inputs.resize(0, spec.input_dim);
    for (int k = 0; k < spec.classes_per_task; ++k) {
      const int cls = (t - 1) * spec.classes_per_task + k;
      task.classes.push_back(cls);
      const Vector& mean = stream.class_means[static_cast<std::size_t>(cls)];

      const Matrix train = draw_cluster(mean, spec.train_per_class, spec.class_spread, rng);
      std::vector<int> perm(static_cast<std::size_t>(spec.train_per_class));
      std::iota(perm.begin(), perm.end(), 0);
      shuffle_indices(perm, rng);
      Matrix lab(labeled_per_class, spec.input_dim);
      Matrix unl(spec.train_per_class - labeled_per_class, spec.input_dim);
      for (int i = 0; i < spec.train_per_class; ++i) {
        const auto src = train.row(perm[static_cast<std::size_t>(i)]);
        if (i < labeled_per_class) {
          lab.row(i) = src;
        } else {
          unl.row(i - labeled_per_class) = src;
        }
      }
      append_rows(task.labeled_inputs, lab);
      task.labeled_labels.insert(task.labeled_labels.end(), static_cast<std::size_t>(labeled_per_class), cls);
      append_rows(task.unlabeled_inputs, unl);
      task.unlabeled_truth_.insert(task.unlabeled_truth_.end(),
                                   static_cast<std::size_t>(unl.rows()), cls);

      append_rows(task.test_inputs, draw_cluster(mean, spec.test_per_class, spec.class_spread, rng));
      task.test_labels.insert(task.test_labels.end(), static_cast<std::size_t>(spec.test_per_class), cls);
    }
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

StrategyFlags strategy_flags(Strategy s) {
  switch (s) {
    case Strategy::kNone:
      return {false, false, false, false};
    case Strategy::kLogit:
      return {true, true, false, false};
    case Strategy::kPseDis:
      return {true, true, true, false};
    case Strategy::kDsgd:
      return {true, true, false, true};
    case Strategy::kCombined:
      return {true, true, true, true};
  }
  return {};
}

ObjectiveConfig ExperimentConfig::objective() const {
  ObjectiveConfig o;
  o.weights = weights;
  o.use_ce = true;
  o.use_ssl = true;
  o.use_logit_distill = flags.logit_distill;
  o.use_pse_dis = flags.pse_dis;
  o.use_sgd = flags.dsgd;
  o.replay_pseudo_ce = replay_pseudo_ce;
  o.scope = scope;
  o.tau = tau;
  o.gamma = gamma;
  o.order = order;
  return o;
}

void ExperimentConfig::validate() const {
  if (hidden_dim < 1 || embedding_dim < 1) throw ConfigError("model dimensions must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_current < 1 || batch_replay < 0) throw ConfigError("batch sizes out of range");
  if (buffer_capacity < 1 || labeled_quota < 0 || labeled_quota > buffer_capacity) {
    throw ConfigError("buffer capacity/quota out of range");
  }
  try {
    augmentation.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  objective().validate();
}

LearnerState init_learner(const ExperimentConfig& config, Rng& rng) {
  LearnerState s;
  s.model = init_model(config.stream.input_dim, config.hidden_dim, config.embedding_dim,
                       config.stream.classes_per_task, rng);
  s.buffer = MemoryBuffer(config.buffer_capacity, config.labeled_quota);
  return s;
}

namespace {

// Current rows first, then replayed exemplars.
TrainingBatch assemble_batch(const Task& task, const std::vector<int>& current, int n_labeled,
                             const std::vector<Exemplar>& replay, const ExperimentConfig& config,
                             const TaskStream* probe, Rng& rng) {
  const auto rows = static_cast<Eigen::Index>(current.size() + replay.size());
  Matrix raw(rows, config.stream.input_dim);
  TrainingBatch batch;
  batch.rows.resize(static_cast<std::size_t>(rows));
  Eigen::Index r = 0;
  for (int idx : current) {
    BatchRow& row = batch.rows[static_cast<std::size_t>(r)];
    if (idx < n_labeled) {
      raw.row(r) = task.labeled_inputs.row(idx);
      row.kind = RowKind::kCurrentLabeled;
      row.label = task.labeled_labels[static_cast<std::size_t>(idx)];
    } else {
      raw.row(r) = task.unlabeled_inputs.row(idx - n_labeled);
      row.kind = RowKind::kCurrentUnlabeled;
    }
    ++r;
  }
  for (const Exemplar& e : replay) {
    BatchRow& row = batch.rows[static_cast<std::size_t>(r)];
    raw.row(r) = e.features.transpose();
    row.kind = e.is_labeled() ? RowKind::kReplayLabeled : RowKind::kReplayUnlabeled;
    row.label = e.class_id();
    row.stored_prediction = e.stored_prediction;
    if (probe != nullptr && !e.is_labeled()) {
      row.probe_label = GroundTruthProbe::unlabeled_label(
          probe->tasks[static_cast<std::size_t>(e.task - 1)], e.source_index);
    }
    ++r;
  }
  batch.weak = augment_rows(raw, config.augmentation, AugmentStrength::kWeak, rng);
  batch.strong = augment_rows(raw, config.augmentation, AugmentStrength::kStrong, rng);
  return batch;
}

}  // namespace

void train_task(LearnerState& state, const Task& task, const ExperimentConfig& config, Rng& rng,
                const TaskStream* probe) {
  if (state.tasks_done > 0) {
    state.model = expand_head(state.model, static_cast<int>(task.classes.size()), rng);
  }
  state.classes_seen += static_cast<int>(task.classes.size());

  const ObjectiveConfig objective = config.objective();
  const ModelParams* old = state.previous ? &*state.previous : nullptr;
  MomentumSgd optimizer(config.lr, config.momentum);

  const int n_labeled = static_cast<int>(task.labeled_inputs.rows());
  const int n_total = n_labeled + static_cast<int>(task.unlabeled_inputs.rows());
  std::vector<int> order(static_cast<std::size_t>(n_total));
  std::iota(order.begin(), order.end(), 0);

  TaskLossTrace trace;
  int step = 0;
  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      shuffle_indices(order, rng);
      for (int start = 0; start < n_total; start += config.batch_current) {
        const int stop = std::min(n_total, start + config.batch_current);
        const std::vector<int> current(order.begin() + start, order.begin() + stop);
        std::vector<Exemplar> replay;
        if (config.flags.replay) replay = sample_replay(state.buffer, config.batch_replay, rng);

        const TrainingBatch batch =
            assemble_batch(task, current, n_labeled, replay, config, probe, rng);
        const LossResult result = total_loss(state.model, batch, old, task.index, objective);
        const LossBundle& l = result.losses;
        if (!std::isfinite(l.total)) trace.all_finite = false;
        trace.ce += l.ce;
        trace.ssl += l.ssl;
        trace.logit_distill += l.logit_distill;
        trace.sgd += l.sgd;
        trace.total += l.total;
        if (objective.use_sgd && objective.weights.sgd > 0.0 && old != nullptr && !replay.empty()) {
          ++trace.sgd_steps;
        }
        optimizer.step(state.model, result.grads);
        ++step;
      }
    }
  } catch (const Error& e) {
    throw Error("task " + std::to_string(task.index) + ", step " + std::to_string(step) + ": " +
                e.what());
  }

  trace.steps = step;
  if (step > 0) {
    const double s = static_cast<double>(step);
    trace.ce /= s;
    trace.ssl /= s;
    trace.logit_distill /= s;
    trace.total /= s;
  }
  if (trace.sgd_steps > 0) trace.sgd /= static_cast<double>(trace.sgd_steps);
  state.losses.push_back(trace);

  if (config.flags.replay) {
    const ForwardResult lab = forward(state.model, task.labeled_inputs);
    const ForwardResult unl = forward(state.model, task.unlabeled_inputs);
    BufferCandidates c;
    c.labeled_inputs = task.labeled_inputs;
    c.labels = task.labeled_labels;
    c.labeled_embeddings = lab.embeddings;
    c.labeled_predictions = softmax_rows(lab.logits);
    c.unlabeled_inputs = task.unlabeled_inputs;
    c.unlabeled_embeddings = unl.embeddings;
    c.unlabeled_predictions = softmax_rows(unl.logits);
    c.task_classes = task.classes;
    state.buffer = update_buffer(state.buffer, c, task.index, state.classes_seen, &state.log);
  }
  state.previous = state.model;
  ++state.tasks_done;
}

void train_task(LearnerState& state, const Task& task, const ExperimentConfig& config, Rng& rng) {
  train_task(state, task, config, rng, nullptr);
}

EvaluationRow evaluate(const ModelParams& model, const TaskStream& stream, int upto) {
  if (upto < 1 || upto > static_cast<int>(stream.tasks.size())) {
    throw IndexError("evaluation horizon out of range");
  }
  EvaluationRow row;
  int pooled_correct = 0;
  int pooled_total = 0;
  for (int t = 0; t < upto; ++t) {
    const Task& task = stream.tasks[static_cast<std::size_t>(t)];
    for (int c : task.classes) {
      if (c >= model.classes()) throw AlignmentError("model head does not cover evaluated classes");
    }
    row.test_accuracy.push_back(accuracy(forward(model, task.test_inputs).logits, task.test_labels));

    const std::vector<int>& truth = GroundTruthProbe::unlabeled_labels(task);
    const Matrix logits = forward(model, task.unlabeled_inputs).logits;
    int correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      if (argmax(logits.row(i)) == truth[static_cast<std::size_t>(i)]) ++correct;
    }
    row.unlabeled_accuracy.push_back(truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size());
    pooled_correct += correct;
    pooled_total += static_cast<int>(truth.size());
  }
  row.unlabeled_train_accuracy =
      pooled_total == 0 ? 0.0 : static_cast<double>(pooled_correct) / pooled_total;
  return row;
}

IncrementalMetrics incremental_metrics(const std::vector<std::vector<double>>& acc) {
  if (acc.empty()) throw AlignmentError("accuracy matrix is empty");
  IncrementalMetrics m;
  double sum_stages = 0.0;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    if (acc[t].size() != t + 1) {
      throw AlignmentError("accuracy row " + std::to_string(t + 1) + " has " +
                           std::to_string(acc[t].size()) + " entries, expected " +
                           std::to_string(t + 1));
    }
    double sum = 0.0;
    for (double a : acc[t]) {
      if (!(a >= 0.0 && a <= 1.0)) throw AlignmentError("accuracy outside [0, 1]");
      sum += a;
    }
    m.per_stage.push_back(sum / static_cast<double>(t + 1));
    sum_stages += m.per_stage.back();
  }
  m.average = sum_stages / static_cast<double>(acc.size());
  return m;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  Rng rng(config.seed);
  const TaskStream stream = make_task_stream(config.stream, rng);
  LearnerState state = init_learner(config, rng);
  const TaskStream* probe = config.scope == DistillScope::kGroundTruth ? &stream : nullptr;

  ExperimentReport report;
  report.seed = config.seed;
  report.log = stream.warnings;
  for (const Task& task : stream.tasks) {
    train_task(state, task, config, rng, probe);
    const EvaluationRow row = evaluate(state.model, stream, task.index);
    report.accuracy.push_back(row.test_accuracy);
    report.unlabeled_task_accuracy.push_back(row.unlabeled_accuracy);
    report.unlabeled_train_accuracy.push_back(row.unlabeled_train_accuracy);
  }
  const IncrementalMetrics metrics = incremental_metrics(report.accuracy);
  report.incremental = metrics.per_stage;
  report.average = metrics.average;
  report.losses = state.losses;
  report.log.insert(report.log.end(), state.log.begin(), state.log.end());
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace dsgd
