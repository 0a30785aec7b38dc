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
#include <string_view>
#include <utility>
#include <vector>

#include "dsgd/driver.hpp"

namespace dsgd {

struct RunConfig {
  ExperimentConfig experiment;
  std::string out_dir = "out";
};

// Flat key=value settings. Keys accept '-' or '_' as separators. Each call
// validates its value and throws ConfigError naming key, value and the
// legal range; unknown keys are rejected the same way.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Lines are `key = value`; '#' starts a comment. A missing file throws
// ConfigError carrying the path.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(std::string_view text, const std::string& origin = "<text>");

// Every key with its current value, in a fixed order. Feeding the pairs
// back through apply_setting reproduces the configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

Strategy parse_strategy(std::string_view name);
DistillScope parse_scope(std::string_view name);
std::string_view scope_name(DistillScope scope);

}  // namespace dsgd
