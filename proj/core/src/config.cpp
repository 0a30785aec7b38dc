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

#include "dsgd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "dsgd/errors.hpp"

namespace dsgd {

namespace {

std::string normalize_key(std::string_view key) {
  std::string out(key);
  for (char& c : out) {
    if (c == '-') c = '_';
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void range_error(std::string_view key, std::string_view value, std::string_view legal) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                    "'; legal range: " + std::string(legal));
}

long long to_integer(std::string_view key, std::string_view value, long long lo, long long hi,
                     std::string_view legal) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || v < lo || v > hi) range_error(key, value, legal);
  return v;
}

struct RealRange {
  double lo;
  double hi;
  bool lo_open;
  bool hi_open;
  std::string_view legal;
};

double to_real(std::string_view key, std::string_view value, const RealRange& r) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) range_error(key, value, r.legal);
  const bool lo_ok = r.lo_open ? v > r.lo : v >= r.lo;
  const bool hi_ok = r.hi_open ? v < r.hi : v <= r.hi;
  if (!lo_ok || !hi_ok) range_error(key, value, r.legal);
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  range_error(key, value, "true|false");
}

std::string fmt_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long long kBig = 1'000'000'000;

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Setting {
  std::string_view key;
  Setter set;
  Getter get;
};

#define DSGD_INT(name, field, lo, hi, legal)                                                     \
  Setting {                                                                                      \
    name,                                                                                        \
        [](RunConfig& c, std::string_view k, std::string_view v) {                               \
          c.field = static_cast<decltype(c.field)>(to_integer(k, v, lo, hi, legal));             \
        },                                                                                       \
        [](const RunConfig& c) { return std::to_string(c.field); }                               \
  }

#define DSGD_REAL(name, field, lo, hi, lo_open, hi_open, legal)                                  \
  Setting {                                                                                      \
    name,                                                                                        \
        [](RunConfig& c, std::string_view k, std::string_view v) {                               \
          c.field = to_real(k, v, RealRange{lo, hi, lo_open, hi_open, legal});                   \
        },                                                                                       \
        [](const RunConfig& c) { return fmt_real(c.field); }                                     \
  }

#define DSGD_BOOL(name, field)                                                                   \
  Setting {                                                                                      \
    name, [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_bool(k, v); }, \
        [](const RunConfig& c) { return fmt_bool(c.field); }                                     \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      DSGD_INT("tasks", experiment.stream.tasks, 1, 1000, "integer >= 1"),
      DSGD_INT("classes_per_task", experiment.stream.classes_per_task, 1, 1000, "integer >= 1"),
      DSGD_INT("input_dim", experiment.stream.input_dim, 2, 100000, "integer >= 2"),
      DSGD_INT("train_per_class", experiment.stream.train_per_class, 1, kBig, "integer >= 1"),
      DSGD_INT("test_per_class", experiment.stream.test_per_class, 1, kBig, "integer >= 1"),
      DSGD_REAL("labeled_fraction", experiment.stream.labeled_fraction, 0.0, 1.0, true, false, "(0, 1]"),
      DSGD_REAL("class_spread", experiment.stream.class_spread, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_REAL("radius", experiment.stream.radius, 0.0, kInf, true, true, "(0, inf)"),
      DSGD_INT("hidden_dim", experiment.hidden_dim, 1, 100000, "integer >= 1"),
      DSGD_INT("embedding_dim", experiment.embedding_dim, 1, 100000, "integer >= 1"),
      DSGD_REAL("lr", experiment.lr, 0.0, kInf, true, true, "(0, inf)"),
      DSGD_REAL("momentum", experiment.momentum, 0.0, 1.0, false, true, "[0, 1)"),
      DSGD_INT("epochs", experiment.epochs, 1, kBig, "integer >= 1"),
      DSGD_INT("batch_current", experiment.batch_current, 1, kBig, "integer >= 1"),
      DSGD_INT("batch_replay", experiment.batch_replay, 0, kBig, "integer >= 0"),
      Setting{"strategy",
              [](RunConfig& c, std::string_view, std::string_view v) {
                c.experiment.flags = strategy_flags(parse_strategy(v));
              },
              nullptr},
      DSGD_BOOL("replay", experiment.flags.replay),
      DSGD_BOOL("logit_distill", experiment.flags.logit_distill),
      DSGD_BOOL("pse_dis", experiment.flags.pse_dis),
      DSGD_BOOL("dsgd", experiment.flags.dsgd),
      Setting{"distill_scope",
              [](RunConfig& c, std::string_view, std::string_view v) { c.experiment.scope = parse_scope(v); },
              [](const RunConfig& c) { return std::string(scope_name(c.experiment.scope)); }},
      DSGD_BOOL("replay_pseudo_ce", experiment.replay_pseudo_ce),
      DSGD_REAL("gamma", experiment.gamma, 0.0, kInf, true, true, "(0, inf)"),
      DSGD_INT("k_order", experiment.order, 0, 64, "integer in [0, 64]"),
      DSGD_REAL("tau", experiment.tau, 0.0, 1.0, true, false, "(0, 1]"),
      DSGD_REAL("lambda_ssl", experiment.weights.ssl, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_REAL("lambda_logit", experiment.weights.logit, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_REAL("lambda_sgd", experiment.weights.sgd, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_REAL("sigma_weak", experiment.augmentation.sigma_weak, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_REAL("sigma_strong", experiment.augmentation.sigma_strong, 0.0, kInf, false, true, "[0, inf)"),
      DSGD_INT("buffer_capacity", experiment.buffer_capacity, 1, kBig, "integer >= 1"),
      DSGD_INT("labeled_quota", experiment.labeled_quota, 0, kBig, "integer >= 0"),
      Setting{"seed",
              [](RunConfig& c, std::string_view k, std::string_view v) {
                std::uint64_t s = 0;
                const auto* end = v.data() + v.size();
                const auto [ptr, ec] = std::from_chars(v.data(), end, s);
                if (ec != std::errc() || ptr != end) range_error(k, v, "unsigned 64-bit integer");
                c.experiment.seed = s;
              },
              [](const RunConfig& c) { return std::to_string(c.experiment.seed); }},
      Setting{"out", [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); },
              nullptr},
  };
  return table;
}

#undef DSGD_INT
#undef DSGD_REAL
#undef DSGD_BOOL

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "none") return Strategy::kNone;
  if (name == "logit") return Strategy::kLogit;
  if (name == "psedis") return Strategy::kPseDis;
  if (name == "dsgd") return Strategy::kDsgd;
  if (name == "combined") return Strategy::kCombined;
  range_error("strategy", name, "none|logit|psedis|dsgd|combined");
}

DistillScope parse_scope(std::string_view name) {
  if (name == "labeled") return DistillScope::kLabeled;
  if (name == "all") return DistillScope::kAll;
  if (name == "gt") return DistillScope::kGroundTruth;
  range_error("distill_scope", name, "labeled|all|gt");
}

std::string_view scope_name(DistillScope scope) {
  switch (scope) {
    case DistillScope::kLabeled:
      return "labeled";
    case DistillScope::kAll:
      return "all";
    case DistillScope::kGroundTruth:
      return "gt";
  }
  return "all";
}

void apply_setting(RunConfig& config, std::string_view raw_key, std::string_view value) {
  const std::string key = normalize_key(trim(raw_key));
  value = trim(value);
  for (const Setting& s : settings()) {
    if (s.key == key) {
      s.set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Setting& s : settings()) {
    if (s.get) out.emplace_back(std::string(s.key), s.get(config));
  }
  return out;
}

}  // namespace dsgd
