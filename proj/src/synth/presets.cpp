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

#include <map>

#include "dfwf/error.hpp"
#include "dfwf/synth/generator.hpp"

namespace dfwf::synth {

namespace {

// Synthesis-like presets alter how the harmonic voice is rendered;
// replay-like presets pass the genuine rendering through a playback chain.
// "identity" changes nothing and serves as a degenerate control.
const std::map<std::string, SpoofTypeSpec>& presets() {
  static const std::map<std::string, SpoofTypeSpec> table = [] {
    std::map<std::string, SpoofTypeSpec> t;
    auto synth = [&t](std::string id, SynthesisParams p) {
      t[id] = SpoofTypeSpec{id, Family::synthesis_like, p, {}};
    };
    auto replay = [&t](std::string id, ReplayParams p) {
      t[id] = SpoofTypeSpec{id, Family::replay_like, {}, p};
    };
    synth("identity", {});
    synth("LA-detune", {.detune_stretch = 1.0});
    synth("LA-formant", {.formant_shift_hz = 700.0});
    synth("LA-formant-mid", {.formant_shift_hz = 300.0});
    synth("LA-phase", {.phase_frame = 2048});
    synth("LA-phase-short", {.phase_frame = 512});
    replay("PA-room", {.lowpass_hz = 2500.0, .echo_delay_ms = 12.0, .echo_gain = 0.5, .echo_taps = 3,
                       .compression = 3.0});
    replay("PA-far", {.lowpass_hz = 1500.0, .echo_delay_ms = 25.0, .echo_gain = 0.6, .echo_taps = 4,
                      .compression = 1.5});
    replay("PA-device", {.lowpass_hz = 4000.0, .compression = 5.0});
    replay("PA-hall", {.lowpass_hz = 3000.0, .echo_delay_ms = 40.0, .echo_gain = 0.7, .echo_taps = 5});
    return t;
  }();
  return table;
}

}  // namespace

SpoofTypeSpec spoof_preset(const std::string& type_id) {
  const auto& t = presets();
  auto it = t.find(type_id);
  if (it == t.end()) throw ConfigError("unknown spoof preset '" + type_id + "'");
  return it->second;
}

std::vector<std::string> preset_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, spec] : presets()) ids.push_back(id);
  return ids;
}

}  // namespace dfwf::synth
