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

// Command-line entry point: one experiment, or a one-key sweep.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dsgd/config.hpp"
#include "dsgd/errors.hpp"
#include "dsgd/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning runs on synthetic task streams"};
  app.option_defaults()->always_capture_default(false);

  std::string config_path;
  std::string sweep;
  std::vector<std::string> sets;
  int jobs = 1;
  // Flag name -> configuration key, applied in this order after the file.
  std::vector<std::pair<std::string, std::optional<std::string>>> flags = {
      {"strategy", {}}, {"distill_scope", {}}, {"seed", {}}, {"tasks", {}},
      {"gamma", {}},    {"k_order", {}},       {"tau", {}},  {"lambda_sgd", {}},
      {"out", {}},
  };
  auto flag = [&](const std::string& key) -> std::optional<std::string>& {
    for (auto& [k, v] : flags) {
      if (k == key) return v;
    }
    throw std::logic_error("unknown flag " + key);
  };

  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", flag("seed"), "random seed");
  app.add_option("--tasks", flag("tasks"), "number of tasks");
  app.add_option("--gamma", flag("gamma"), "transition smoothness (> 0)");
  app.add_option("--k-order", flag("k_order"), "PPR order K (>= 0)");
  app.add_option("--tau", flag("tau"), "pseudo-label confidence threshold in (0, 1]");
  app.add_option("--lambda-sgd", flag("lambda_sgd"), "weight of the sub-graph distillation loss");
  app.add_option("--strategy", flag("strategy"), "none|logit|psedis|dsgd|combined");
  app.add_option("--distill-scope", flag("distill_scope"), "labeled|all|gt");
  app.add_option("--sweep", sweep, "KEY=A..B or KEY=v1,v2,... ; one run per value");
  app.add_option("--out", flag("out"), "output directory");
  app.add_option("--set", sets, "extra KEY=VALUE override (repeatable)");
  app.add_option("--jobs", jobs, "parallel runs for --sweep")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  dsgd::RunConfig config;
  try {
    if (!config_path.empty()) config = dsgd::parse_config_file(config_path);
    for (const auto& [key, value] : flags) {
      if (value) dsgd::apply_setting(config, key, *value);
    }
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw dsgd::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      dsgd::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.experiment.validate();

    if (!sweep.empty()) {
      const dsgd::SweepSpec spec = dsgd::parse_sweep(sweep);
      return dsgd::run_sweep(config, spec, std::cout, jobs);
    }
  } catch (const dsgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  return dsgd::run(config, std::cout);
}
