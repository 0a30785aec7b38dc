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

#include "dsgd/memory.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "dsgd/errors.hpp"

namespace dsgd {

int Exemplar::class_id() const {
  return std::visit([](const auto& l) { return l.class_id; }, label);
}

MemoryBuffer::MemoryBuffer(int capacity, int labeled_quota)
    : capacity_(capacity), labeled_quota_(labeled_quota) {
  if (capacity < 1) throw InvalidParameter("buffer capacity must be positive");
  if (labeled_quota < 0 || labeled_quota > capacity) {
    throw InvalidParameter("labeled quota must lie in [0, capacity]");
  }
}

int MemoryBuffer::labeled_count() const {
  return static_cast<int>(std::count_if(exemplars_.begin(), exemplars_.end(),
                                        [](const Exemplar& e) { return e.is_labeled(); }));
}

int MemoryBuffer::unlabeled_count() const {
  return static_cast<int>(exemplars_.size()) - labeled_count();
}

void MemoryBuffer::check_invariants() const {
  if (static_cast<int>(exemplars_.size()) > capacity_) throw InvalidInput("buffer over capacity");
  if (labeled_count() > labeled_quota()) throw InvalidInput("labeled quota exceeded");
  if (unlabeled_count() > unlabeled_quota()) throw InvalidInput("unlabeled quota exceeded");
}

std::vector<int> herding_order(const EmbeddingMatrix& features) {
  const Matrix& f = features.data();
  const Eigen::Index n = f.rows();
  Matrix unit(n, f.cols());
  for (Eigen::Index i = 0; i < n; ++i) unit.row(i) = f.row(i) / std::max(f.row(i).norm(), kNormFloor);
  const Eigen::RowVectorXd mean = unit.colwise().mean();

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(f.cols());
  for (Eigen::Index k = 1; k <= n; ++k) {
    int best = -1;
    double best_dist = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double dist = (mean - (running + unit.row(i)) / static_cast<double>(k)).norm();
      if (best < 0 || dist < best_dist) {
        best = static_cast<int>(i);
        best_dist = dist;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    running += unit.row(best);
    order.push_back(best);
  }
  return order;
}

namespace {

void check_rows(const Matrix& inputs, const Matrix& embeddings, const Matrix& predictions,
                std::size_t labels, bool with_labels, const char* what) {
  const auto n = inputs.rows();
  if (embeddings.rows() != n || predictions.rows() != n ||
      (with_labels && static_cast<Eigen::Index>(labels) != n)) {
    throw AlignmentError(std::string(what) + " candidates are not row-aligned");
  }
}

// Herds each group and keeps the first `quota` picks.
void herd_groups(const std::map<int, std::vector<int>>& groups, const Matrix& inputs,
                 const Matrix& embeddings, const Matrix& predictions, bool labeled, int task,
                 int quota, std::vector<Exemplar>& out) {
  for (const auto& [cls, members] : groups) {
    Matrix emb(static_cast<Eigen::Index>(members.size()), embeddings.cols());
    for (std::size_t i = 0; i < members.size(); ++i) {
      emb.row(static_cast<Eigen::Index>(i)) = embeddings.row(members[i]);
    }
    const std::vector<int> order = herding_order(EmbeddingMatrix(emb));
    const int keep = std::min<int>(quota, static_cast<int>(order.size()));
    for (int rank = 0; rank < keep; ++rank) {
      const int row = members[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])];
      Exemplar e;
      e.features = inputs.row(row).transpose();
      e.stored_prediction = predictions.row(row);
      if (labeled) {
        e.label = TrueLabel{cls};
      } else {
        e.label = PseudoLabel{cls, predictions(row, cls)};
      }
      e.task = task;
      e.herding_rank = rank;
      e.source_index = row;
      out.push_back(std::move(e));
    }
  }
}

void enforce_pool_quota(std::vector<Exemplar>& pool, int quota, const char* name,
                        std::vector<std::string>* log) {
  // Oldest groups go first: lowest task, then lowest class id.
  std::stable_sort(pool.begin(), pool.end(), [](const Exemplar& a, const Exemplar& b) {
    return std::tuple(a.task, a.class_id(), a.herding_rank) <
           std::tuple(b.task, b.class_id(), b.herding_rank);
  });
  while (static_cast<int>(pool.size()) > quota) {
    const int task = pool.front().task;
    const int cls = pool.front().class_id();
    const auto end = std::find_if(pool.begin(), pool.end(), [&](const Exemplar& e) {
      return e.task != task || e.class_id() != cls;
    });
    const auto dropped = std::distance(pool.begin(), end);
    pool.erase(pool.begin(), end);
    if (log) {
      log->push_back(std::string(name) + " quota too small for one exemplar per class; dropped " +
                     std::to_string(dropped) + " exemplar(s) of class " + std::to_string(cls) +
                     " from task " + std::to_string(task));
    }
  }
}

}  // namespace

MemoryBuffer update_buffer(const MemoryBuffer& buffer, const BufferCandidates& c, int task,
                           int classes_seen, std::vector<std::string>* log) {
  if (classes_seen < 1) throw InvalidParameter("classes_seen must be positive");
  if (c.task_classes.empty()) throw InvalidParameter("task introduces no classes");
  check_rows(c.labeled_inputs, c.labeled_embeddings, c.labeled_predictions, c.labels.size(), true,
             "labeled");
  check_rows(c.unlabeled_inputs, c.unlabeled_embeddings, c.unlabeled_predictions, 0, false,
             "unlabeled");

  auto per_class = [&](int quota, const char* name) {
    int q = quota / classes_seen;
    if (q == 0 && quota > 0) {
      q = 1;
      if (log) {
        log->push_back(std::string(name) + " quota " + std::to_string(quota) + " over " +
                       std::to_string(classes_seen) + " classes rounds to zero; keeping 1 per class");
      }
    }
    return q;
  };
  const int q_labeled = per_class(buffer.labeled_quota(), "labeled");
  const int q_unlabeled = per_class(buffer.unlabeled_quota(), "unlabeled");

  std::vector<Exemplar> labeled;
  std::vector<Exemplar> unlabeled;
  for (const Exemplar& e : buffer.exemplars()) {
    const bool l = e.is_labeled();
    if (e.herding_rank < (l ? q_labeled : q_unlabeled)) (l ? labeled : unlabeled).push_back(e);
  }

  std::map<int, std::vector<int>> labeled_groups;
  for (std::size_t i = 0; i < c.labels.size(); ++i) labeled_groups[c.labels[i]].push_back(static_cast<int>(i));
  herd_groups(labeled_groups, c.labeled_inputs, c.labeled_embeddings, c.labeled_predictions, true,
              task, q_labeled, labeled);

  std::map<int, std::vector<int>> unlabeled_groups;
  for (Eigen::Index i = 0; i < c.unlabeled_predictions.rows(); ++i) {
    int best = c.task_classes.front();
    for (int cls : c.task_classes) {
      if (cls >= c.unlabeled_predictions.cols()) throw AlignmentError("task class beyond prediction width");
      if (c.unlabeled_predictions(i, cls) > c.unlabeled_predictions(i, best)) best = cls;
    }
    unlabeled_groups[best].push_back(static_cast<int>(i));
  }
  herd_groups(unlabeled_groups, c.unlabeled_inputs, c.unlabeled_embeddings, c.unlabeled_predictions,
              false, task, q_unlabeled, unlabeled);

  enforce_pool_quota(labeled, buffer.labeled_quota(), "labeled", log);
  enforce_pool_quota(unlabeled, buffer.unlabeled_quota(), "unlabeled", log);

  MemoryBuffer out(buffer.capacity(), buffer.labeled_quota());
  auto& ex = out.mutable_exemplars();
  ex = std::move(labeled);
  ex.insert(ex.end(), std::make_move_iterator(unlabeled.begin()), std::make_move_iterator(unlabeled.end()));
  out.check_invariants();
  return out;
}

std::vector<Exemplar> sample_replay(const MemoryBuffer& buffer, int m, Rng& rng) {
  std::vector<Exemplar> out;
  if (buffer.empty() || m <= 0) return out;
  const auto size = static_cast<int>(buffer.size());
  out.reserve(static_cast<std::size_t>(m));
  if (m <= size) {
    std::vector<int> idx(static_cast<std::size_t>(size));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, size - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
      out.push_back(buffer.exemplars()[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    }
  } else {
    std::uniform_int_distribution<int> pick(0, size - 1);
    for (int i = 0; i < m; ++i) out.push_back(buffer.exemplars()[static_cast<std::size_t>(pick(rng))]);
  }
  return out;
}

}  // namespace dsgd
