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

#include "dfwf/synth/benchmark.hpp"

#include <random>

#include "dfwf/error.hpp"
#include "dfwf/seed.hpp"

namespace dfwf::synth {

BenchmarkKind parse_benchmark_kind(const std::string& s) {
  if (s == "two_task_gap") return BenchmarkKind::two_task_gap;
  if (s == "four_task_chain") return BenchmarkKind::four_task_chain;
  throw ConfigError("unknown benchmark '" + s + "'");
}

std::string to_string(BenchmarkKind k) {
  return k == BenchmarkKind::two_task_gap ? "two_task_gap" : "four_task_chain";
}

void SplitSizes::validate() const {
  if (train < 2 || dev < 2 || eval < 2) {
    throw ConfigError("every split needs at least 2 utterances (one per class)");
  }
}

std::vector<std::string> benchmark_presets(BenchmarkKind kind) {
  if (kind == BenchmarkKind::two_task_gap) return {"LA-detune", "PA-room"};
  return {"LA-detune", "LA-phase", "LA-formant", "LA-formant-mid"};
}

std::vector<WaveTask> build_tasks(const std::vector<std::string>& presets, const SplitSizes& sizes,
                                  std::uint64_t seed) {
  sizes.validate();
  if (presets.empty()) throw ConfigError("benchmark needs at least one task");
  std::vector<WaveTask> tasks;
  for (std::size_t t = 0; t < presets.size(); ++t) {
    const SpoofTypeSpec spec = spoof_preset(presets[t]);
    WaveTask task;
    task.task_id = spec.type_id;
    const std::pair<const char*, std::size_t> splits[] = {
        {"train", sizes.train}, {"dev", sizes.dev}, {"eval", sizes.eval}};
    for (std::size_t s = 0; s < 3; ++s) {
      const auto [name, count] = splits[s];
      const std::size_t n_spoof = count / 2;
      const std::size_t n_genuine = count - n_spoof;
      const std::string prefix = task.task_id + "_" + name;
      auto utts = generate_genuine(n_genuine, derive_seed(seed, {t, s, 0}), prefix + "_gen");
      auto spoofs = generate_spoof(spec, n_spoof, derive_seed(seed, {t, s, 1}), prefix + "_spf");
      utts.insert(utts.end(), std::make_move_iterator(spoofs.begin()), std::make_move_iterator(spoofs.end()));
      (s == 0 ? task.train : s == 1 ? task.dev : task.eval) = std::move(utts);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<WaveTask> build_benchmark(BenchmarkKind kind, const SplitSizes& sizes, std::uint64_t seed) {
  return build_tasks(benchmark_presets(kind), sizes, seed);
}

train::Example make_example(const Utterance& u, const FeatureOptions& opts, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, {hash_string(u.utt_id)}));
  const audio::FeatureMatrix f =
      audio::normalize_duration(audio::lfcc(u.wave, opts.lfcc), opts.target_frames, rng);
  train::Example ex;
  ex.utt_id = u.utt_id;
  ex.label = u.label;
  ex.type_id = u.type_id;
  ex.features.resize(static_cast<std::size_t>(f.rows() * f.cols()));
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      ex.features[static_cast<std::size_t>(r * f.cols() + c)] = static_cast<float>(f.values(r, c));
    }
  }
  return ex;
}

train::TaskSequence featurize(const std::vector<WaveTask>& tasks, const FeatureOptions& opts,
                              std::uint64_t seed) {
  train::TaskSequence seq;
  seq.feature_rows = opts.lfcc.num_features();
  seq.feature_cols = opts.target_frames;
  for (const auto& wt : tasks) {
    train::Task task;
    task.task_id = wt.task_id;
    for (const auto& u : wt.train) task.train.push_back(make_example(u, opts, seed));
    for (const auto& u : wt.dev) task.dev.push_back(make_example(u, opts, seed));
    for (const auto& u : wt.eval) task.eval.push_back(make_example(u, opts, seed));
    seq.tasks.push_back(std::move(task));
  }
  seq.validate();
  return seq;
}

}  // namespace dfwf::synth
