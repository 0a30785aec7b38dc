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

#include "dsgd/distillation.hpp"

#include <numeric>
#include <string>
#include <unordered_set>

#include "dsgd/errors.hpp"

namespace dsgd {

namespace {

void check_node(const TopologyGraph& g, int node, const char* what) {
  if (node < 0 || node >= g.size()) {
    throw IndexError(std::string(what) + " index " + std::to_string(node) +
                     " out of range for graph of " + std::to_string(g.size()) + " nodes");
  }
}

void check_order(int order) {
  if (order < 0) throw InvalidParameter("PPR order must be nonnegative");
}

// Repeated propagation of an n x r block of walk distributions.
// history, when given, receives Q^0 .. Q^{K-1} for the reverse pass.
Matrix accumulate_walks(const Matrix& p, Matrix q, int order, std::vector<Matrix>* history) {
  Matrix total = q;
  for (int t = 1; t <= order; ++t) {
    if (history) history->push_back(q);
    q = p * q;
    total += q;
  }
  return total;
}

void enumerate_walks(const Matrix& p, int node, int depth, int order, double mass, Vector& out) {
  out[node] += mass;
  if (depth == order) return;
  for (Eigen::Index next = 0; next < p.rows(); ++next) {
    enumerate_walks(p, static_cast<int>(next), depth + 1, order, mass * p(next, node), out);
  }
}

}  // namespace

Vector ppr_k(const TopologyGraph& g, int start, int order) {
  check_node(g, start, "start");
  check_order(order);
  Matrix e = Matrix::Zero(g.size(), 1);
  e(start, 0) = 1.0;
  return accumulate_walks(g.transition(), std::move(e), order, nullptr).col(0);
}

Vector brute_force_ppr(const TopologyGraph& g, int start, int order) {
  if (g.size() > 8 || order > 5) {
    throw RefusalError("brute-force PPR is limited to n <= 8 and K <= 5");
  }
  check_node(g, start, "start");
  check_order(order);
  Vector out = Vector::Zero(g.size());
  enumerate_walks(g.transition(), start, 0, order, 1.0, out);
  return out;
}

DistillationVectorSet distillation_vectors(const TopologyGraph& g, const std::vector<int>& starts,
                                           const std::vector<int>& targets, int order) {
  if (starts.empty()) throw InvalidParameter("distillation vectors need at least one start vertex");
  check_order(order);
  for (int s : starts) check_node(g, s, "start");
  for (int x : targets) check_node(g, x, "target");

  Matrix q0 = Matrix::Zero(g.size(), static_cast<Eigen::Index>(starts.size()));
  for (std::size_t i = 0; i < starts.size(); ++i) q0(starts[i], static_cast<Eigen::Index>(i)) = 1.0;
  const Matrix pi = accumulate_walks(g.transition(), std::move(q0), order, nullptr);

  DistillationVectorSet set;
  set.values.resize(static_cast<Eigen::Index>(targets.size()), pi.cols());
  for (std::size_t x = 0; x < targets.size(); ++x) {
    set.values.row(static_cast<Eigen::Index>(x)) = pi.row(targets[x]);
  }
  set.start_ids = starts;
  set.target_ids = targets;
  set.order = order;
  return set;
}

double sgd_loss(const DistillationVectorSet& old_set, const DistillationVectorSet& new_set) {
  if (old_set.start_ids != new_set.start_ids || old_set.target_ids != new_set.target_ids ||
      old_set.order != new_set.order) {
    throw AlignmentError("distillation vector sets disagree on start ids, target ids or order");
  }
  if (old_set.values.rows() != new_set.values.rows() ||
      old_set.values.cols() != new_set.values.cols()) {
    throw AlignmentError("distillation vector sets have different shapes");
  }
  if (old_set.values.size() == 0) return 0.0;
  return (old_set.values - new_set.values).squaredNorm() /
         static_cast<double>(old_set.values.size());
}

SgdLossResult sgd_loss_from_embeddings(const EmbeddingMatrix& z_old, const EmbeddingMatrix& z_new,
                                       const std::vector<int>& replay_positions, double gamma,
                                       int order) {
  const auto r = static_cast<Eigen::Index>(replay_positions.size());
  if (r == 0) throw InvalidParameter("sub-graph distillation needs at least one replayed sample");
  if (z_old.rows() != r) {
    throw AlignmentError("old embeddings have " + std::to_string(z_old.rows()) +
                         " rows but there are " + std::to_string(r) + " replay positions");
  }
  check_order(order);
  std::unordered_set<int> seen;
  for (int pos : replay_positions) {
    if (pos < 0 || pos >= z_new.rows()) {
      throw IndexError("replay position " + std::to_string(pos) + " outside merged batch");
    }
    if (!seen.insert(pos).second) {
      throw InvalidParameter("replay position " + std::to_string(pos) + " repeated");
    }
  }

  std::vector<int> ordinals(static_cast<std::size_t>(r));
  std::iota(ordinals.begin(), ordinals.end(), 0);

  const TopologyGraph old_graph = build_graph(z_old, gamma);
  DistillationVectorSet old_set = distillation_vectors(old_graph, ordinals, ordinals, order);

  const GraphTape tape = build_graph_taped(z_new, gamma);
  const Eigen::Index n = z_new.rows();
  Matrix q0 = Matrix::Zero(n, r);
  for (Eigen::Index k = 0; k < r; ++k) q0(replay_positions[static_cast<std::size_t>(k)], k) = 1.0;
  std::vector<Matrix> history;
  history.reserve(static_cast<std::size_t>(order));
  const Matrix pi = accumulate_walks(tape.transition, std::move(q0), order, &history);

  DistillationVectorSet new_set;
  new_set.values.resize(r, r);
  for (Eigen::Index x = 0; x < r; ++x) {
    new_set.values.row(x) = pi.row(replay_positions[static_cast<std::size_t>(x)]);
  }
  new_set.start_ids = ordinals;
  new_set.target_ids = ordinals;
  new_set.order = order;

  SgdLossResult result;
  result.loss = sgd_loss(old_set, new_set);

  const double scale = -2.0 / static_cast<double>(r * r);
  Matrix grad_pi = Matrix::Zero(n, r);
  for (Eigen::Index x = 0; x < r; ++x) {
    grad_pi.row(replay_positions[static_cast<std::size_t>(x)]) =
        scale * (old_set.values.row(x) - new_set.values.row(x));
  }

  // Q^t = P Q^{t-1}, Pi = sum_t Q^t. Walk the adjoint backwards from Q^K.
  Matrix grad_p = Matrix::Zero(n, n);
  Matrix adjoint = grad_pi;
  for (int t = order; t >= 1; --t) {
    grad_p.noalias() += adjoint * history[static_cast<std::size_t>(t - 1)].transpose();
    adjoint = grad_pi + tape.transition.transpose() * adjoint;
  }

  result.grad = graph_backward(tape, grad_p);
  return result;
}

}  // namespace dsgd
