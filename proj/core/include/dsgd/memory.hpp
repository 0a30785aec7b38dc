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

#include <string>
#include <variant>
#include <vector>

#include "dsgd/graph.hpp"
#include "dsgd/linalg.hpp"

namespace dsgd {

struct TrueLabel {
  int class_id = -1;
  bool operator==(const TrueLabel&) const = default;
};

struct PseudoLabel {
  int class_id = -1;
  double confidence = 0.0;
  bool operator==(const PseudoLabel&) const = default;
};

using LabelKind = std::variant<TrueLabel, PseudoLabel>;

struct Exemplar {
  Vector features;
  LabelKind label;
  int task = 1;  // task of origin, 1-based
  Eigen::RowVectorXd stored_prediction;
  int herding_rank = 0;  // position in its group's herding order
  int source_index = 0;  // row in the originating task's labeled or unlabeled set

  bool is_labeled() const { return std::holds_alternative<TrueLabel>(label); }
  int class_id() const;
};

class MemoryBuffer {
 public:
  MemoryBuffer() = default;
  // labeled_quota + unlabeled_quota must equal capacity.
  MemoryBuffer(int capacity, int labeled_quota);

  int capacity() const { return capacity_; }
  int labeled_quota() const { return labeled_quota_; }
  int unlabeled_quota() const { return capacity_ - labeled_quota_; }

  const std::vector<Exemplar>& exemplars() const { return exemplars_; }
  std::vector<Exemplar>& mutable_exemplars() { return exemplars_; }
  std::size_t size() const { return exemplars_.size(); }
  bool empty() const { return exemplars_.empty(); }

  int labeled_count() const;
  int unlabeled_count() const;

  // Throws InvalidInput when a capacity or quota invariant is broken.
  void check_invariants() const;

 private:
  int capacity_ = 0;
  int labeled_quota_ = 0;
  std::vector<Exemplar> exemplars_;
};

// Greedy herding on L2-normalized rows; ties go to the smaller index.
std::vector<int> herding_order(const EmbeddingMatrix& features);

// Everything update_buffer needs from the task that just finished. Rows of
// each labeled/unlabeled block are aligned.
struct BufferCandidates {
  Matrix labeled_inputs;
  std::vector<int> labels;
  Matrix labeled_embeddings;
  Matrix labeled_predictions;

  Matrix unlabeled_inputs;
  Matrix unlabeled_embeddings;
  Matrix unlabeled_predictions;

  std::vector<int> task_classes;  // classes introduced by this task
};

// Recomputes per-class quotas over classes_seen, truncates existing groups
// to their herding prefix and herds the new candidates. Unlabeled
// candidates are grouped by argmax prediction over the task's own classes.
// Messages about forced quota shrinking are appended to log when given.
MemoryBuffer update_buffer(const MemoryBuffer& buffer, const BufferCandidates& candidates, int task,
                           int classes_seen, std::vector<std::string>* log = nullptr);

// Without replacement when m <= size, otherwise with replacement. Empty
// buffer gives an empty sample.
std::vector<Exemplar> sample_replay(const MemoryBuffer& buffer, int m, Rng& rng);

std::string buffer_to_json(const MemoryBuffer& buffer);
MemoryBuffer buffer_from_json(const std::string& text);

}  // namespace dsgd
