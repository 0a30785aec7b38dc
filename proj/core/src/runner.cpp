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

#include "dsgd/runner.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "dsgd/errors.hpp"

namespace dsgd {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("failed writing " + path.string());
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  try {
    ExperimentReport report = run_experiment(config.experiment);
    report.config = config_entries(config);

    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    write_file(dir / "report.json", report_to_json(report));
    write_file(dir / "accuracy.csv", accuracy_csv(report));
    write_file(dir / "metrics.csv", metrics_csv(report));
    write_file(dir / "timing.json",
               "{\n  \"wall_clock_seconds\": " + fixed6(report.wall_clock_seconds) + "\n}\n");

    for (const std::string& line : report.log) log << "note: " << line << "\n";
    log << "seed " << config.experiment.seed << ": A = " << fixed6(report.average)
        << ", last A_t = " << fixed6(report.incremental.back()) << " ("
        << fixed6(report.wall_clock_seconds) << " s) -> " << dir.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError("sweep must look like KEY=A..B or KEY=v1,v2; got '" + text + "'");
  }
  SweepSpec s;
  s.label = text.substr(0, eq);
  s.key = s.label;
  for (char& c : s.key) {
    if (c == '-') c = '_';
  }
  if (s.key == "k" || s.key == "K") s.key = "k_order";

  const std::string rhs = text.substr(eq + 1);
  if (const auto dots = rhs.find(".."); dots != std::string::npos) {
    int lo = 0;
    int hi = 0;
    try {
      std::size_t used = 0;
      lo = std::stoi(rhs.substr(0, dots), &used);
      if (used != dots) throw std::invalid_argument("lo");
      const std::string tail = rhs.substr(dots + 2);
      hi = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("hi");
    } catch (const std::logic_error&) {
      throw ConfigError("sweep range must be integer A..B; got '" + rhs + "'");
    }
    if (hi < lo) throw ConfigError("sweep range is empty: '" + rhs + "'");
    for (int v = lo; v <= hi; ++v) s.values.push_back(std::to_string(v));
  } else {
    std::stringstream in(rhs);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) s.values.push_back(item);
    }
  }
  if (s.values.empty()) throw ConfigError("sweep has no values");

  RunConfig probe;
  for (const std::string& v : s.values) apply_setting(probe, s.key, v);
  return s;
}

int run_sweep(const RunConfig& base, const SweepSpec& sweep, std::ostream& log, int jobs) {
  std::vector<RunConfig> runs;
  for (const std::string& v : sweep.values) {
    RunConfig c = base;
    apply_setting(c, sweep.key, v);
    c.out_dir = (fs::path(base.out_dir) / (sweep.label + v)).string();
    runs.push_back(std::move(c));
  }

  std::vector<int> codes(runs.size(), 0);
  std::vector<std::string> logs(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      std::ostringstream out;
      codes[i] = run(runs[i], out);
      logs[i] = out.str();
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(runs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  int status = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    log << "[" << sweep.label << sweep.values[i] << "] " << logs[i];
    status = std::max(status, codes[i]);
  }
  return status;
}

}  // namespace dsgd
