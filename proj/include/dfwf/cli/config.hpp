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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfwf/model/lcnn.hpp"
#include "dfwf/synth/benchmark.hpp"
#include "dfwf/train/trainer.hpp"

namespace dfwf::cli {

inline constexpr const char* kVersion = "0.1.0";

// One split read from disk: a CM protocol plus the directory of its WAVs.
struct SplitPaths {
  std::filesystem::path protocol;
  std::filesystem::path wav_dir;
};

struct DiskTask {
  std::string task_id;
  SplitPaths train, dev, eval;
};

struct DataConfig {
  // "synthetic" builds a benchmark per seed; "protocol" reads `tasks`.
  std::string source = "synthetic";
  synth::BenchmarkKind benchmark = synth::BenchmarkKind::two_task_gap;
  // Overrides the benchmark's preset list when non-empty.
  std::vector<std::string> presets;
  synth::SplitSizes sizes;
  std::vector<DiskTask> tasks;
};

struct GridConfig {
  bool enabled = false;
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> betas{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path output_root = "runs";
  DataConfig data;
  synth::FeatureOptions features;
  model::LcnnConfig model = model::LcnnConfig::desk_default();
  train::TrainingStrategy strategy;
  train::TrainOptions train;
  GridConfig grid;
  std::vector<std::uint64_t> seeds{0};

  // Throws ConfigError on any invalid field or unreadable input path.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Relative data paths are taken relative to `base_dir`. Unknown keys are
// rejected so that typos fail loudly.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

// Reads a JSON config; ConfigError when missing or malformed.
nlohmann::json load_config_json(const std::filesystem::path& path);

// Applies "a.b.c=value"; the value is parsed as JSON when possible and kept
// as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

// <output_root>/<name>, with $DFWF_OUT replacing output_root when set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& c);

}  // namespace dfwf::cli
