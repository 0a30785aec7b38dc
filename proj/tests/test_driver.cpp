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

#include <doctest.h>

#include <cmath>
#include <set>

#include "dsgd/driver.hpp"
#include "dsgd/errors.hpp"
#include "dsgd/runner.hpp"
#include "support/oracles.hpp"

using namespace dsgd;

namespace {

// Labels of unlabeled rows must not be reachable through Task's public
// surface. Access checks participate in substitution, so this is false
// exactly when the member is private.
template <class T>
concept exposes_truth = requires(const T& t) { t.unlabeled_truth_; };
static_assert(!exposes_truth<Task>);

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.stream.train_per_class = 60;
  c.stream.test_per_class = 30;
  c.stream.tasks = 3;
  c.epochs = 4;
  c.buffer_capacity = 24;
  c.labeled_quota = 6;
  return c;
}

}  // namespace

TEST_SUITE("driver") {
  TEST_CASE("task stream invariants") {
    StreamSpec spec;
    Rng rng(1);
    const TaskStream s = make_task_stream(spec, rng);
    REQUIRE(s.tasks.size() == 5);
    std::set<int> classes;
    for (const Task& t : s.tasks) {
      CHECK(t.classes.size() == 2);
      for (int c : t.classes) CHECK(classes.insert(c).second);
      CHECK(t.labeled_inputs.rows() + t.unlabeled_inputs.rows() == 2 * spec.train_per_class);
      CHECK(t.test_inputs.rows() == 2 * spec.test_per_class);
      CHECK(GroundTruthProbe::unlabeled_labels(t).size() == std::size_t(t.unlabeled_inputs.rows()));
      for (int c : t.classes) {
        const auto n = std::count(t.labeled_labels.begin(), t.labeled_labels.end(), c);
        CHECK(std::abs(double(n) - spec.labeled_fraction * spec.train_per_class) <= 1.0);
      }
      for (int y : t.test_labels) CHECK(std::find(t.classes.begin(), t.classes.end(), y) != t.classes.end());
    }
    CHECK(classes.size() == 10);
    CHECK(s.warnings.empty());
  }

  TEST_CASE("train and test rows are distinct draws") {
    StreamSpec spec;
    spec.tasks = 1;
    Rng rng(2);
    const TaskStream s = make_task_stream(spec, rng);
    const Task& t = s.tasks[0];
    for (Eigen::Index i = 0; i < t.test_inputs.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.labeled_inputs.rows(); ++j) CHECK(t.test_inputs.row(i) != t.labeled_inputs.row(j));
    }
  }

  TEST_CASE("stream is deterministic under a seed") {
    Rng a(3), b(3);
    const TaskStream s = make_task_stream(StreamSpec{}, a);
    const TaskStream u = make_task_stream(StreamSpec{}, b);
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
      CHECK(s.tasks[t].labeled_inputs == u.tasks[t].labeled_inputs);
      CHECK(s.tasks[t].unlabeled_inputs == u.tasks[t].unlabeled_inputs);
    }
  }

  TEST_CASE("full labels empty the unlabeled set; tiny fractions force one label") {
    StreamSpec spec;
    spec.labeled_fraction = 1.0;
    Rng rng(4);
    const TaskStream s = make_task_stream(spec, rng);
    for (const Task& t : s.tasks) CHECK(t.unlabeled_inputs.rows() == 0);

    spec.labeled_fraction = 0.001;
    const TaskStream w = make_task_stream(spec, rng);
    CHECK(w.warnings.size() == 1);
    CHECK(std::count(w.tasks[0].labeled_labels.begin(), w.tasks[0].labeled_labels.end(), 0) == 1);
  }

  TEST_CASE("zero spread makes nearest-mean classification exact") {
    StreamSpec spec;
    spec.class_spread = 0.0;
    Rng rng(5);
    const TaskStream s = make_task_stream(spec, rng);
    for (const Task& t : s.tasks) {
      for (Eigen::Index i = 0; i < t.test_inputs.rows(); ++i) {
        int best = -1;
        double best_d = 0.0;
        for (std::size_t c = 0; c < s.class_means.size(); ++c) {
          const double d = (t.test_inputs.row(i).transpose() - s.class_means[c]).norm();
          if (best < 0 || d < best_d) best = int(c), best_d = d;
        }
        CHECK(best == t.test_labels[std::size_t(i)]);
      }
    }
  }

  TEST_CASE("strategy presets set the expected switches") {
    const StrategyFlags none = strategy_flags(Strategy::kNone);
    CHECK(!none.replay);
    CHECK(!none.logit_distill);
    CHECK(!none.dsgd);
    const StrategyFlags logit = strategy_flags(Strategy::kLogit);
    CHECK((logit.replay && logit.logit_distill && !logit.pse_dis && !logit.dsgd));
    const StrategyFlags pse = strategy_flags(Strategy::kPseDis);
    CHECK((pse.replay && pse.logit_distill && pse.pse_dis && !pse.dsgd));
    const StrategyFlags dsgd = strategy_flags(Strategy::kDsgd);
    CHECK((dsgd.replay && dsgd.logit_distill && !dsgd.pse_dis && dsgd.dsgd));
    const StrategyFlags all = strategy_flags(Strategy::kCombined);
    CHECK((all.replay && all.logit_distill && all.pse_dis && all.dsgd));
  }

  TEST_CASE("incremental metrics") {
    const IncrementalMetrics m = incremental_metrics({{0.9}, {0.8, 0.7}});
    CHECK(m.per_stage[0] == 0.9);
    CHECK(m.per_stage[1] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.average == doctest::Approx(0.825).epsilon(1e-15));
    CHECK(incremental_metrics({{1.0}, {1.0, 1.0}, {1.0, 1.0, 1.0}}).average == 1.0);
    CHECK(incremental_metrics({{0.0}, {0.0, 0.0}}).average == 0.0);
    CHECK_THROWS_AS(incremental_metrics({}), AlignmentError);
    CHECK_THROWS_AS(incremental_metrics({{0.5}, {0.5}}), AlignmentError);
    CHECK_THROWS_AS(incremental_metrics({{1.5}}), AlignmentError);
  }

  TEST_CASE("untrained model is near chance on a balanced task") {
    StreamSpec spec;
    spec.tasks = 1;
    spec.test_per_class = 2000;
    spec.radius = 0.01;
    spec.class_spread = 1.0;
    Rng rng(6);
    const TaskStream s = make_task_stream(spec, rng);
    double mean = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
      Rng m(seed);
      mean += evaluate(init_model(2, 16, 8, 2, m), s, 1).test_accuracy[0] / 10.0;
    }
    CHECK(std::abs(mean - 0.5) < 0.1);
  }

  TEST_CASE("well-separated single task is learned perfectly") {
    ExperimentConfig c = small_config();
    c.stream.tasks = 1;
    c.stream.classes_per_task = 4;
    c.stream.class_spread = 0.0;
    c.stream.labeled_fraction = 1.0;
    c.epochs = 30;
    const ExperimentReport r = run_experiment(c);
    CHECK(r.accuracy[0][0] == 1.0);
    CHECK(r.unlabeled_train_accuracy[0] == 0.0);
  }

  TEST_CASE("training without protection forgets the first task") {
    ExperimentConfig c = small_config();
    c.flags = strategy_flags(Strategy::kNone);
    c.stream.tasks = 2;
    c.epochs = 20;
    const ExperimentReport r = run_experiment(c);
    CHECK(r.accuracy[1][0] < r.accuracy[0][0]);
  }

  TEST_CASE("dsgd runs a finite sub-graph term after the first task") {
    const ExperimentConfig c = small_config();
    Rng rng(c.seed);
    const TaskStream stream = make_task_stream(c.stream, rng);
    LearnerState s = init_learner(c, rng);
    for (const Task& t : stream.tasks) {
      train_task(s, t, c, rng);
      CHECK(s.model.classes() == t.index * c.stream.classes_per_task);
      CHECK_NOTHROW(s.buffer.check_invariants());
      CHECK(s.buffer.labeled_count() <= c.labeled_quota);
      REQUIRE(s.previous.has_value());
    }
    REQUIRE(s.losses.size() == 3);
    CHECK(s.losses[0].sgd_steps == 0);
    CHECK(s.losses[0].sgd == 0.0);
    for (std::size_t t = 1; t < 3; ++t) {
      CHECK(s.losses[t].sgd_steps == s.losses[t].steps);
      CHECK(s.losses[t].sgd > 0.0);
      CHECK(std::isfinite(s.losses[t].sgd));
      CHECK(s.losses[t].all_finite);
    }
  }

  TEST_CASE("report metrics recompute from the accuracy matrix") {
    const ExperimentReport r = run_experiment(small_config());
    CHECK(std::abs(r.average - oracle::average_incremental(r.accuracy)) < 1e-12);
    for (std::size_t t = 0; t < r.accuracy.size(); ++t) {
      CHECK(r.accuracy[t].size() == t + 1);
      double s = 0.0;
      for (double a : r.accuracy[t]) s += a;
      CHECK(std::abs(r.incremental[t] - s / double(t + 1)) < 1e-12);
    }
  }

  TEST_CASE("same config and seed give identical reports") {
    const ExperimentConfig c = small_config();
    CHECK(report_to_json(run_experiment(c)) == report_to_json(run_experiment(c)));
    ExperimentConfig d = c;
    d.seed = 1;
    CHECK(report_to_json(run_experiment(c)) != report_to_json(run_experiment(d)));
  }

  TEST_CASE("training errors name the task and step") {
    ExperimentConfig c = small_config();
    c.lr = 1e200;
    try {
      run_experiment(c);
      FAIL("expected divergence");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("task ") == 0);
      CHECK(msg.find("step ") != std::string::npos);
    }
  }

  TEST_CASE("ground-truth scope reads labels through the probe only") {
    ExperimentConfig c = small_config();
    c.scope = DistillScope::kGroundTruth;
    const ExperimentReport gt = run_experiment(c);
    c.scope = DistillScope::kAll;
    const ExperimentReport all = run_experiment(c);
    CHECK(report_to_json(gt) != report_to_json(all));
  }

  TEST_CASE("config validation") {
    ExperimentConfig c;
    c.labeled_quota = 200;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.augmentation.sigma_strong = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
