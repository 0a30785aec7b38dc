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

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "dsgd/distillation.hpp"
#include "dsgd/driver.hpp"
#include "dsgd/graph.hpp"
#include "dsgd/model.hpp"
#include "dsgd/objective.hpp"

using namespace dsgd;

namespace {

Matrix gaussian(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<int> first_n(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

static void BM_BuildGraph(benchmark::State& state) {
  const EmbeddingMatrix z(gaussian(static_cast<int>(state.range(0)), 16, 1));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(z, 1.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void BM_Ppr(benchmark::State& state) {
  const int n = 64;
  const TopologyGraph g = build_graph(EmbeddingMatrix(gaussian(n, 16, 2)), 1.0);
  const auto starts = first_n(32);
  const auto order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distillation_vectors(g, starts, starts, order));
}
BENCHMARK(BM_Ppr)->DenseRange(1, 8, 1);

static void BM_SgdLossAndGrad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int r = n / 2;
  const EmbeddingMatrix z_old(gaussian(r, 16, 3));
  const EmbeddingMatrix z_new(gaussian(n, 16, 4));
  std::vector<int> pos(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) pos[static_cast<std::size_t>(i)] = n - r + i;
  for (auto _ : state) benchmark::DoNotOptimize(sgd_loss_from_embeddings(z_old, z_new, pos, 1.0, 6));
}
BENCHMARK(BM_SgdLossAndGrad)->Arg(16)->Arg(64)->Arg(128);

static void BM_TrainingStep(benchmark::State& state) {
  Rng rng(5);
  const ModelParams old_model = init_model(2, 32, 16, 8, rng);
  const ModelParams model = expand_head(old_model, 2, rng);
  TrainingBatch batch;
  batch.weak = gaussian(64, 2, 6);
  batch.strong = gaussian(64, 2, 7);
  batch.rows.resize(64);
  for (int i = 0; i < 64; ++i) {
    BatchRow& row = batch.rows[static_cast<std::size_t>(i)];
    if (i < 32) {
      row.kind = i % 10 == 0 ? RowKind::kCurrentLabeled : RowKind::kCurrentUnlabeled;
      row.label = row.kind == RowKind::kCurrentLabeled ? 8 + i % 2 : -1;
    } else {
      row.kind = i % 4 == 0 ? RowKind::kReplayLabeled : RowKind::kReplayUnlabeled;
      row.label = i % 8;
      row.stored_prediction = Eigen::RowVectorXd::Constant(8, 1.0 / 8.0);
    }
  }
  ExperimentConfig config;
  config.flags = strategy_flags(state.range(0) ? Strategy::kDsgd : Strategy::kLogit);
  const ObjectiveConfig objective = config.objective();
  MomentumSgd opt(0.05, 0.9);
  ModelParams p = model;
  for (auto _ : state) {
    const LossResult r = total_loss(p, batch, &old_model, 2, objective);
    opt.step(p, r.grads);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1)->ArgNames({"dsgd"});

BENCHMARK_MAIN();
