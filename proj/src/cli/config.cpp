// Copyright 2026 The DFWF Lab Authors
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

#include "dfwf/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "dfwf/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dfwf::cli {

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

fs::path rebase(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

json split_json(const SplitPaths& s) {
  return {{"protocol", s.protocol.string()}, {"wav_dir", s.wav_dir.string()}};
}

SplitPaths split_from(const json& j, const std::string& where, const fs::path& base) {
  reject_unknown(j, where, {"protocol", "wav_dir"});
  SplitPaths s;
  s.protocol = rebase(j.at("protocol").get<std::string>(), base);
  s.wav_dir = rebase(j.at("wav_dir").get<std::string>(), base);
  return s;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json tasks = json::array();
  for (const auto& t : c.data.tasks) {
    tasks.push_back({{"task_id", t.task_id},
                     {"train", split_json(t.train)},
                     {"dev", split_json(t.dev)},
                     {"eval", split_json(t.eval)}});
  }
  const auto& f = c.features.lfcc;
  const auto& a = c.train.adam;
  return {
      {"name", c.name},
      {"output_root", c.output_root.string()},
      {"data",
       {{"source", c.data.source},
        {"benchmark", synth::to_string(c.data.benchmark)},
        {"presets", c.data.presets},
        {"sizes", {{"train", c.data.sizes.train}, {"dev", c.data.sizes.dev}, {"eval", c.data.sizes.eval}}},
        {"tasks", tasks}}},
      {"features",
       {{"window_ms", f.window_ms},
        {"hop_ms", f.hop_ms},
        {"fft_bins", f.fft_bins},
        {"num_filters", f.num_filters},
        {"num_ceps", f.num_ceps},
        {"include_deltas", f.include_deltas},
        {"delta_width", f.delta_width},
        {"log_floor", f.log_floor},
        {"pre_emphasis", f.pre_emphasis},
        {"pre_emphasis_coeff", f.pre_emphasis_coeff},
        {"cepstral_mean_norm", f.cepstral_mean_norm},
        {"target_frames", c.features.target_frames}}},
      {"model", c.model},
      {"strategy",
       {{"kind", train::to_string(c.strategy.kind)},
        {"alpha", c.strategy.weights.alpha},
        {"beta", c.strategy.weights.beta},
        {"temperature", c.strategy.distill.temperature},
        {"psa_form", loss::to_string(c.strategy.psa_form)}}},
      {"optimizer",
       {{"lr", a.lr},
        {"beta1", a.beta1},
        {"beta2", a.beta2},
        {"epsilon", a.epsilon},
        {"epochs", a.epochs},
        {"batch_size", a.batch_size},
        {"select_best_dev", c.train.select_best_dev}}},
      {"grid", {{"enabled", c.grid.enabled}, {"alphas", c.grid.alphas}, {"betas", c.grid.betas}}},
      {"seeds", c.seeds},
  };
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    reject_unknown(j, "config",
                   {"name", "output_root", "data", "features", "model", "strategy", "optimizer", "grid", "seeds"});
    read(j, "name", c.name);
    if (j.contains("output_root")) c.output_root = j.at("output_root").get<std::string>();

    if (j.contains("data")) {
      const json& d = j.at("data");
      reject_unknown(d, "data", {"source", "benchmark", "presets", "sizes", "tasks"});
      read(d, "source", c.data.source);
      if (d.contains("benchmark")) c.data.benchmark = synth::parse_benchmark_kind(d.at("benchmark").get<std::string>());
      read(d, "presets", c.data.presets);
      if (d.contains("sizes")) {
        const json& s = d.at("sizes");
        reject_unknown(s, "data.sizes", {"train", "dev", "eval"});
        read(s, "train", c.data.sizes.train);
        read(s, "dev", c.data.sizes.dev);
        read(s, "eval", c.data.sizes.eval);
      }
      if (d.contains("tasks")) {
        for (const auto& t : d.at("tasks")) {
          reject_unknown(t, "data.tasks[]", {"task_id", "train", "dev", "eval"});
          DiskTask task;
          task.task_id = t.at("task_id").get<std::string>();
          task.train = split_from(t.at("train"), "data.tasks[].train", base_dir);
          task.dev = split_from(t.at("dev"), "data.tasks[].dev", base_dir);
          task.eval = split_from(t.at("eval"), "data.tasks[].eval", base_dir);
          c.data.tasks.push_back(std::move(task));
        }
      }
    }

    if (j.contains("features")) {
      const json& f = j.at("features");
      reject_unknown(f, "features",
                     {"window_ms", "hop_ms", "fft_bins", "num_filters", "num_ceps", "include_deltas", "delta_width",
                      "log_floor", "pre_emphasis", "pre_emphasis_coeff", "cepstral_mean_norm", "target_frames"});
      auto& l = c.features.lfcc;
      read(f, "window_ms", l.window_ms);
      read(f, "hop_ms", l.hop_ms);
      read(f, "fft_bins", l.fft_bins);
      read(f, "num_filters", l.num_filters);
      read(f, "num_ceps", l.num_ceps);
      read(f, "include_deltas", l.include_deltas);
      read(f, "delta_width", l.delta_width);
      read(f, "log_floor", l.log_floor);
      read(f, "pre_emphasis", l.pre_emphasis);
      read(f, "pre_emphasis_coeff", l.pre_emphasis_coeff);
      read(f, "cepstral_mean_norm", l.cepstral_mean_norm);
      read(f, "target_frames", c.features.target_frames);
    }

    if (j.contains("model")) {
      reject_unknown(j.at("model"), "model",
                     {"input_rows", "input_cols", "conv_blocks", "embedding_dim", "num_classes", "pooling",
                      "final_bias", "init_seed"});
      c.model = j.at("model").get<model::LcnnConfig>();
    }

    if (j.contains("strategy")) {
      const json& s = j.at("strategy");
      reject_unknown(s, "strategy", {"kind", "alpha", "beta", "temperature", "psa_form"});
      if (s.contains("kind")) c.strategy.kind = train::parse_strategy(s.at("kind").get<std::string>());
      if (c.strategy.kind == train::StrategyKind::fine_tune || c.strategy.kind == train::StrategyKind::multi_condition) {
        c.strategy.weights = {0.0, 0.0};
      } else if (c.strategy.kind == train::StrategyKind::lwf_only) {
        c.strategy.weights.beta = 0.0;
      } else if (c.strategy.kind == train::StrategyKind::psa_only) {
        c.strategy.weights.alpha = 0.0;
      }
      read(s, "alpha", c.strategy.weights.alpha);
      read(s, "beta", c.strategy.weights.beta);
      read(s, "temperature", c.strategy.distill.temperature);
      if (s.contains("psa_form")) c.strategy.psa_form = loss::parse_psa_form(s.at("psa_form").get<std::string>());
    }

    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      reject_unknown(o, "optimizer", {"lr", "beta1", "beta2", "epsilon", "epochs", "batch_size", "select_best_dev"});
      auto& a = c.train.adam;
      read(o, "lr", a.lr);
      read(o, "beta1", a.beta1);
      read(o, "beta2", a.beta2);
      read(o, "epsilon", a.epsilon);
      read(o, "epochs", a.epochs);
      read(o, "batch_size", a.batch_size);
      read(o, "select_best_dev", c.train.select_best_dev);
    }

    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown(g, "grid", {"enabled", "alphas", "betas"});
      read(g, "enabled", c.grid.enabled);
      read(g, "alphas", c.grid.alphas);
      read(g, "betas", c.grid.betas);
    }

    if (j.contains("seeds")) {
      const json& s = j.at("seeds");
      c.seeds = s.is_array() ? s.get<std::vector<std::uint64_t>>() : std::vector<std::uint64_t>{s.get<std::uint64_t>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.model.input_rows = c.features.lfcc.num_features();
  c.model.input_cols = c.features.target_frames;
  return c;
}

void ExperimentConfig::validate() const {
  if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("name must be a non-empty single path component");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  features.lfcc.validate();
  if (features.target_frames <= 0) throw ConfigError("target_frames must be positive");
  model.validate();
  strategy.validate();
  train.adam.validate();
  if (grid.enabled && (grid.alphas.empty() || grid.betas.empty())) throw ConfigError("grid needs alphas and betas");
  for (double v : grid.alphas) loss::LossWeights{v, 0.0}.validate();
  for (double v : grid.betas) loss::LossWeights{0.0, v}.validate();
  if (data.source == "synthetic") {
    data.sizes.validate();
    for (const auto& p : data.presets) synth::spoof_preset(p);
  } else if (data.source == "protocol") {
    if (data.tasks.empty()) throw ConfigError("data.tasks must list at least one task for source 'protocol'");
    std::set<std::string> ids;
    for (const auto& t : data.tasks) {
      if (!ids.insert(t.task_id).second) throw ConfigError("duplicate task id '" + t.task_id + "'");
      for (const auto* s : {&t.train, &t.dev, &t.eval}) {
        if (!fs::is_regular_file(s->protocol)) throw ConfigError("protocol not found: " + s->protocol.string());
        if (!fs::is_directory(s->wav_dir)) throw ConfigError("wav directory not found: " + s->wav_dir.string());
      }
    }
  } else {
    throw ConfigError("data.source must be 'synthetic' or 'protocol', got '" + data.source + "'");
  }
}

json load_config_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override key '" + key + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

fs::path resolve_output_dir(const ExperimentConfig& c) {
  const char* env = std::getenv("DFWF_OUT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : c.output_root;
  return root / c.name;
}

}  // namespace dfwf::cli
