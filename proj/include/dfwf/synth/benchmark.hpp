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
#include <string>
#include <vector>

#include "dfwf/audio/lfcc.hpp"
#include "dfwf/synth/generator.hpp"
#include "dfwf/train/task.hpp"

namespace dfwf::synth {

// two_task_gap: one synthesis-like task followed by one replay-like task.
// four_task_chain: four synthesis-like presets in sequence.
enum class BenchmarkKind { two_task_gap, four_task_chain };

BenchmarkKind parse_benchmark_kind(const std::string& s);
std::string to_string(BenchmarkKind k);

// Per-task utterance counts; each split is split evenly between genuine and
// spoofed speech (the odd one out goes to genuine).
struct SplitSizes {
  std::size_t train = 400;
  std::size_t dev = 200;
  std::size_t eval = 200;
  void validate() const;
};

struct WaveTask {
  std::string task_id;
  std::vector<Utterance> train, dev, eval;
};

// Preset ids used by a benchmark, in task order.
std::vector<std::string> benchmark_presets(BenchmarkKind kind);

// Genuine utterances of every split and task come from disjoint seed
// streams of the same generator; utterance ids are
// <task>_<split>_<gen|spf>_<index>.
std::vector<WaveTask> build_benchmark(BenchmarkKind kind, const SplitSizes& sizes, std::uint64_t seed);
std::vector<WaveTask> build_tasks(const std::vector<std::string>& presets, const SplitSizes& sizes,
                                  std::uint64_t seed);

struct FeatureOptions {
  audio::LfccConfig lfcc;
  int target_frames = 320;
};

// LFCC + duration normalization. The slice offset for long utterances is
// drawn from a stream keyed by (seed, utt_id), so results do not depend on
// processing order.
train::Example make_example(const Utterance& u, const FeatureOptions& opts, std::uint64_t seed);
train::TaskSequence featurize(const std::vector<WaveTask>& tasks, const FeatureOptions& opts,
                              std::uint64_t seed);

}  // namespace dfwf::synth
