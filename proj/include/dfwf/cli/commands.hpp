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
#include <iosfwd>
#include <string>
#include <vector>

#include "dfwf/cli/config.hpp"
#include "dfwf/eval/metrics.hpp"

namespace dfwf::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Maps an exception to the exit code above.
int exit_code_for(const std::exception& e);

// Feature sequence for one seed, synthetic or from protocol files.
train::TaskSequence load_sequence(const ExperimentConfig& c, std::uint64_t seed);

// Seeds are spread over `parallel` worker threads; each seed writes to its
// own seed_<n> directory.
void cmd_run(const ExperimentConfig& c, int parallel, std::ostream& log);
void cmd_ablate(const ExperimentConfig& c, int parallel, std::ostream& log);

struct ScoreOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path protocol;
  std::filesystem::path wav_dir;
  std::filesystem::path scores_out;
  // Optional 2-D PCA projection of the embeddings (CSV).
  std::filesystem::path embeddings_out;
  synth::FeatureOptions features;
  std::uint64_t seed = 0;
};

eval::EvalReport cmd_score(const ScoreOptions& o, std::ostream& log);

struct ExtractOptions {
  std::filesystem::path protocol;
  std::filesystem::path wav_dir;
  std::filesystem::path out_dir;
  synth::FeatureOptions features;
  std::uint64_t seed = 0;
};

// One <utt_id>.lfcc feature record per protocol entry; returns the count.
std::size_t cmd_extract_features(const ExtractOptions& o, std::ostream& log);

struct GenDataOptions {
  synth::BenchmarkKind benchmark = synth::BenchmarkKind::two_task_gap;
  std::vector<std::string> presets;
  synth::SplitSizes sizes;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

// WAVs and protocols under out_dir, plus data_config.json: a runnable config
// whose data section reads the dump back.
void cmd_gen_data(const GenDataOptions& o, std::ostream& log);

}  // namespace dfwf::cli
