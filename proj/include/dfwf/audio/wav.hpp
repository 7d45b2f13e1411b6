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

#include <filesystem>
#include <vector>

namespace dfwf::audio {

// Mono audio with amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Throws ConfigError when empty or sample_rate <= 0.
  void validate() const;
};

// Reads a 16-bit PCM mono RIFF/WAVE file. Samples are divided by 32768.
// Throws DataError for missing files, non-PCM encodings, bit depths other
// than 16, and multi-channel audio.
Waveform load_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples are scaled by 32768, rounded to nearest and
// clamped to the int16 range, so any buffer whose samples are multiples of
// 1/32768 in [-1, 32767/32768] round-trips exactly.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace dfwf::audio
