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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsgd/memory.hpp"
#include "dsgd/model.hpp"
#include "dsgd/objective.hpp"
#include "dsgd/semi_supervised.hpp"

namespace dsgd {

// Gaussian class clusters whose means sit on a circle of the given radius
// in the first two input coordinates.
struct StreamSpec {
  int tasks = 5;
  int classes_per_task = 2;
  int input_dim = 2;
  int train_per_class = 200;
  int test_per_class = 100;
  double labeled_fraction = 0.1;
  double class_spread = 0.1;
  double radius = 1.0;

  int total_classes() const { return tasks * classes_per_task; }
};

class GroundTruthProbe;
class TaskStream;

// One task of the stream. The labels of the unlabeled training rows are
// private; only GroundTruthProbe can read them.
class Task {
 public:
  int index = 1;  // 1-based
  std::vector<int> classes;

  Matrix labeled_inputs;
  std::vector<int> labeled_labels;
  Matrix unlabeled_inputs;
  Matrix test_inputs;
  std::vector<int> test_labels;

 private:
  friend class GroundTruthProbe;
  friend TaskStream make_task_stream(const StreamSpec&, Rng&);
  std::vector<int> unlabeled_truth_;
};

// Diagnostic access to unlabeled ground truth: evaluation and the
// ground-truth distillation probe.
class GroundTruthProbe {
 public:
  static int unlabeled_label(const Task& task, int row) {
    return task.unlabeled_truth_.at(static_cast<std::size_t>(row));
  }
  static const std::vector<int>& unlabeled_labels(const Task& task) { return task.unlabeled_truth_; }
};

class TaskStream {
 public:
  StreamSpec spec;
  std::vector<Task> tasks;
  std::vector<std::string> warnings;
  std::vector<Vector> class_means;
};

TaskStream make_task_stream(const StreamSpec& spec, Rng& rng);

enum class Strategy { kNone, kLogit, kPseDis, kDsgd, kCombined };

struct StrategyFlags {
  bool replay = true;
  bool logit_distill = true;
  bool pse_dis = false;
  bool dsgd = true;
};

StrategyFlags strategy_flags(Strategy s);

struct ExperimentConfig {
  StreamSpec stream;

  int hidden_dim = 32;
  int embedding_dim = 16;

  double lr = 0.05;
  double momentum = 0.9;
  int epochs = 50;
  int batch_current = 32;
  int batch_replay = 32;

  StrategyFlags flags = strategy_flags(Strategy::kDsgd);
  DistillScope scope = DistillScope::kAll;
  bool replay_pseudo_ce = true;

  double gamma = kDefaultGamma;
  int order = kDefaultOrder;
  double tau = kDefaultTau;
  LossWeights weights;
  AugmentationPolicy augmentation;

  int buffer_capacity = 100;
  int labeled_quota = 25;

  std::uint64_t seed = 0;

  ObjectiveConfig objective() const;
  void validate() const;
};

// Mean loss terms over the steps of one task.
struct TaskLossTrace {
  int steps = 0;
  int sgd_steps = 0;  // steps where the sub-graph term was evaluated
  double ce = 0.0;
  double ssl = 0.0;
  double logit_distill = 0.0;
  double sgd = 0.0;
  double total = 0.0;
  bool all_finite = true;
};

struct LearnerState {
  ModelParams model;
  std::optional<ModelParams> previous;  // frozen copy after the last task
  MemoryBuffer buffer;
  int tasks_done = 0;
  int classes_seen = 0;
  std::vector<TaskLossTrace> losses;
  std::vector<std::string> log;
};

LearnerState init_learner(const ExperimentConfig& config, Rng& rng);

// Expands the head for the task's classes (after the first task), trains for
// the configured epochs, then freezes a copy of the model and refreshes the
// buffer. Errors are rethrown naming the task and step.
void train_task(LearnerState& state, const Task& task, const ExperimentConfig& config, Rng& rng);
// probe is only consulted by the ground-truth distillation scope.
void train_task(LearnerState& state, const Task& task, const ExperimentConfig& config, Rng& rng,
                const TaskStream* probe);

struct EvaluationRow {
  std::vector<double> test_accuracy;       // one per task 1..upto
  std::vector<double> unlabeled_accuracy;  // one per task 1..upto
  double unlabeled_train_accuracy = 0.0;   // pooled over tasks 1..upto
};

EvaluationRow evaluate(const ModelParams& model, const TaskStream& stream, int upto);

struct IncrementalMetrics {
  std::vector<double> per_stage;  // A_t
  double average = 0.0;           // A
};

// acc[t] must hold t+1 entries in [0, 1].
IncrementalMetrics incremental_metrics(const std::vector<std::vector<double>>& acc);

struct ExperimentReport {
  std::vector<std::vector<double>> accuracy;
  std::vector<std::vector<double>> unlabeled_task_accuracy;
  std::vector<double> incremental;
  double average = 0.0;
  std::vector<double> unlabeled_train_accuracy;
  std::vector<TaskLossTrace> losses;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> log;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;  // kept out of report.json
};

ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace dsgd
