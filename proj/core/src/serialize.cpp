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

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dsgd/errors.hpp"
#include "dsgd/memory.hpp"
#include "dsgd/model.hpp"
#include "dsgd/runner.hpp"

namespace dsgd {

using json = nlohmann::ordered_json;

namespace {

constexpr int kModelFormatVersion = 1;
constexpr int kBufferFormatVersion = 1;
constexpr int kReportFormatVersion = 1;

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidInput(what + ": data length does not match rows x cols");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return m;
}

json row_json(const Eigen::RowVectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::RowVectorXd row_from(const json& a) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void check_header(const json& j, const char* format, int version) {
  if (j.value("format", "") != format) throw InvalidInput(std::string("expected format ") + format);
  if (j.value("version", 0) != version) {
    throw InvalidInput(std::string(format) + " version " + std::to_string(j.value("version", 0)) +
                       " is not supported");
  }
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string model_to_json(const ModelParams& params) {
  json tensors = json::object();
  const auto t = params.tensors();
  for (std::size_t i = 0; i < t.size(); ++i) {
    tensors[std::string(ModelParams::kTensorNames[i])] = matrix_json(*t[i]);
  }
  json j = {{"format", "dsgd-model"},
            {"version", kModelFormatVersion},
            {"input_dim", params.input_dim()},
            {"hidden_dim", params.hidden_dim()},
            {"embedding_dim", params.embedding_dim()},
            {"classes", params.classes()},
            {"tensors", std::move(tensors)}};
  return j.dump(1);
}

ModelParams model_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "model checkpoint");
  check_header(j, "dsgd-model", kModelFormatVersion);
  ModelParams p;
  auto t = p.tensors();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::string name(ModelParams::kTensorNames[i]);
    *t[i] = matrix_from(j.at("tensors").at(name), name);
  }
  if (p.input_dim() != j.at("input_dim").get<int>() || p.hidden_dim() != j.at("hidden_dim").get<int>() ||
      p.embedding_dim() != j.at("embedding_dim").get<int>() || p.classes() != j.at("classes").get<int>()) {
    throw InvalidInput("checkpoint dimensions disagree with tensor shapes");
  }
  if (!p.all_finite()) throw PoisonedState("checkpoint contains non-finite parameters");
  return p;
}

std::string buffer_to_json(const MemoryBuffer& buffer) {
  json ex = json::array();
  for (const Exemplar& e : buffer.exemplars()) {
    json item = {{"features", row_json(e.features.transpose())},
                 {"task", e.task},
                 {"herding_rank", e.herding_rank},
                 {"source_index", e.source_index},
                 {"stored_prediction", row_json(e.stored_prediction)}};
    if (const auto* tl = std::get_if<TrueLabel>(&e.label)) {
      item["label"] = {{"kind", "true"}, {"class", tl->class_id}};
    } else {
      const auto& pl = std::get<PseudoLabel>(e.label);
      item["label"] = {{"kind", "pseudo"}, {"class", pl.class_id}, {"confidence", pl.confidence}};
    }
    ex.push_back(std::move(item));
  }
  json j = {{"format", "dsgd-buffer"},
            {"version", kBufferFormatVersion},
            {"capacity", buffer.capacity()},
            {"labeled_quota", buffer.labeled_quota()},
            {"unlabeled_quota", buffer.unlabeled_quota()},
            {"exemplars", std::move(ex)}};
  return j.dump(1);
}

MemoryBuffer buffer_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "buffer snapshot");
  check_header(j, "dsgd-buffer", kBufferFormatVersion);
  MemoryBuffer buf(j.at("capacity").get<int>(), j.at("labeled_quota").get<int>());
  if (buf.unlabeled_quota() != j.at("unlabeled_quota").get<int>()) {
    throw InvalidInput("buffer quotas do not add up to capacity");
  }
  for (const json& item : j.at("exemplars")) {
    Exemplar e;
    e.features = row_from(item.at("features")).transpose();
    e.task = item.at("task").get<int>();
    e.herding_rank = item.at("herding_rank").get<int>();
    e.source_index = item.at("source_index").get<int>();
    e.stored_prediction = row_from(item.at("stored_prediction"));
    const json& label = item.at("label");
    const std::string kind = label.at("kind").get<std::string>();
    if (kind == "true") {
      e.label = TrueLabel{label.at("class").get<int>()};
    } else if (kind == "pseudo") {
      e.label = PseudoLabel{label.at("class").get<int>(), label.at("confidence").get<double>()};
    } else {
      throw InvalidInput("unknown label kind '" + kind + "'");
    }
    buf.mutable_exemplars().push_back(std::move(e));
  }
  buf.check_invariants();
  return buf;
}

std::string report_to_json(const ExperimentReport& r) {
  json config = json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  json losses = json::array();
  for (std::size_t t = 0; t < r.losses.size(); ++t) {
    const TaskLossTrace& l = r.losses[t];
    losses.push_back({{"task", t + 1},
                      {"steps", l.steps},
                      {"sgd_steps", l.sgd_steps},
                      {"ce", l.ce},
                      {"ssl", l.ssl},
                      {"logit_distill", l.logit_distill},
                      {"sgd", l.sgd},
                      {"total", l.total},
                      {"all_finite", l.all_finite}});
  }
  json j = {{"format", "dsgd-report"},
            {"version", kReportFormatVersion},
            {"seed", r.seed},
            {"config", std::move(config)},
            {"accuracy", r.accuracy},
            {"incremental", r.incremental},
            {"average", r.average},
            {"unlabeled_train_accuracy", r.unlabeled_train_accuracy},
            {"unlabeled_task_accuracy", r.unlabeled_task_accuracy},
            {"losses", std::move(losses)},
            {"log", r.log}};
  return j.dump(2) + "\n";
}

std::string accuracy_csv(const ExperimentReport& r) {
  std::string out = "task,eval_task,accuracy\n";
  for (std::size_t t = 0; t < r.accuracy.size(); ++t) {
    for (std::size_t i = 0; i < r.accuracy[t].size(); ++i) {
      out += std::to_string(t + 1) + "," + std::to_string(i + 1) + "," + fixed6(r.accuracy[t][i]) + "\n";
    }
  }
  return out;
}

std::string metrics_csv(const ExperimentReport& r) {
  std::string out = "task,A_t,unlabeled_train_acc\n";
  for (std::size_t t = 0; t < r.incremental.size(); ++t) {
    out += std::to_string(t + 1) + "," + fixed6(r.incremental[t]) + "," +
           fixed6(r.unlabeled_train_accuracy[t]) + "\n";
  }
  return out;
}

std::vector<std::vector<double>> accuracy_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "task,eval_task,accuracy") {
    throw InvalidInput("accuracy CSV header mismatch");
  }
  std::vector<std::vector<double>> acc;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int task = 0;
    int eval = 0;
    double value = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &task, &eval, &value) != 3 || task < 1 || eval < 1) {
      throw InvalidInput("malformed accuracy CSV line: " + line);
    }
    if (static_cast<std::size_t>(task) > acc.size()) acc.resize(static_cast<std::size_t>(task));
    auto& row = acc[static_cast<std::size_t>(task - 1)];
    if (static_cast<std::size_t>(eval) != row.size() + 1) {
      throw InvalidInput("accuracy CSV rows out of order at: " + line);
    }
    row.push_back(value);
  }
  return acc;
}

}  // namespace dsgd
