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

#include <iosfwd>
#include <string>
#include <vector>

#include "dsgd/config.hpp"
#include "dsgd/driver.hpp"

namespace dsgd {

// report.json: full report without wall-clock (byte-stable under a seed).
std::string report_to_json(const ExperimentReport& report);
// Header `task,eval_task,accuracy`, one row per (t, i <= t), %.6f values.
std::string accuracy_csv(const ExperimentReport& report);
// Header `task,A_t,unlabeled_train_acc`.
std::string metrics_csv(const ExperimentReport& report);

// Parses accuracy.csv back into the triangular matrix.
std::vector<std::vector<double>> accuracy_from_csv(const std::string& text);

// Runs one experiment and writes report.json, accuracy.csv, metrics.csv and
// timing.json into config.out_dir. Returns 0 on success, 1 on failure.
int run(const RunConfig& config, std::ostream& log);

// `KEY=A..B` (integer range) or `KEY=v1,v2,...`.
struct SweepSpec {
  std::string label;  // as written, used for subdirectory names
  std::string key;    // canonical configuration key
  std::vector<std::string> values;
};

SweepSpec parse_sweep(const std::string& text);

// One run per value in <out>/<label><value>. jobs > 1 runs in parallel.
int run_sweep(const RunConfig& base, const SweepSpec& sweep, std::ostream& log, int jobs = 1);

}  // namespace dsgd
