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

#include "dfwf/audio/wav.hpp"
#include "dfwf/label.hpp"

namespace dfwf::synth {

enum class Family { synthesis_like, replay_like };

Family parse_family(const std::string& s);
std::string to_string(Family f);

// Rendering changes applied to a genuine-like voice by synthesis-like
// attacks. Defaults leave the voice untouched.
struct SynthesisParams {
  // Partial k is placed at k * f0 * (1 + detune_stretch * (k - 1)).
  double detune_stretch = 0.0;
  // Every partial is moved by this many Hz (spectral-envelope shift).
  double formant_shift_hz = 0.0;
  // > 0: resynthesise with random STFT phases using frames of this length.
  int phase_frame = 0;
};

// Playback-chain changes applied by replay-like attacks.
struct ReplayParams {
  double lowpass_hz = 0.0;     // 0 disables; 4th-order Butterworth otherwise
  double echo_delay_ms = 0.0;  // 0 disables
  double echo_gain = 0.0;
  int echo_taps = 0;
  double compression = 0.0;    // tanh drive; 0 disables
};

struct SpoofTypeSpec {
  std::string type_id;
  Family family = Family::synthesis_like;
  SynthesisParams synthesis;
  ReplayParams replay;
};

// Built-in attack presets, see presets.cpp for their parameters.
SpoofTypeSpec spoof_preset(const std::string& type_id);
std::vector<std::string> preset_ids();

struct Utterance {
  std::string utt_id;
  Label label = Label::genuine;
  std::string type_id;  // "-" for genuine speech
  audio::Waveform wave;
};

// n genuine utterances: 3-6 harmonics of a 100-300 Hz fundamental with
// vibrato, a smooth syllabic envelope and a low noise floor, 2-4 s at
// 16 kHz. All parameters come from one fixed distribution.
std::vector<Utterance> generate_genuine(std::size_t n, std::uint64_t seed,
                                        const std::string& id_prefix = "gen");

// n spoofed utterances. Utterance i starts from the same voice draw as
// generate_genuine(n, seed)[i] and then has the preset's transform applied,
// so a preset that changes nothing reproduces the genuine utterance.
std::vector<Utterance> generate_spoof(const SpoofTypeSpec& spec, std::size_t n, std::uint64_t seed,
                                      const std::string& id_prefix = "spf");

}  // namespace dfwf::synth
