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

#include "dfwf/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "dfwf/audio/fft.hpp"
#include "dfwf/error.hpp"
#include "dfwf/seed.hpp"

namespace dfwf::synth {

Family parse_family(const std::string& s) {
  if (s == "synthesis_like") return Family::synthesis_like;
  if (s == "replay_like") return Family::replay_like;
  throw ConfigError("unknown spoof family '" + s + "'");
}

std::string to_string(Family f) {
  return f == Family::synthesis_like ? "synthesis_like" : "replay_like";
}

namespace {

constexpr int kSampleRate = 16000;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Voice {
  std::size_t length = 0;
  double f0 = 0;
  double vibrato_depth = 0, vibrato_rate = 0, vibrato_phase = 0;
  std::vector<double> partial_gain, partial_phase;
  double syllable_rate = 0, syllable_phase = 0, syllable_depth = 0;
  double peak = 0;
  double noise_level = 0;  // relative to peak
};

Voice draw_voice(std::mt19937_64& rng) {
  auto u = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Voice v;
  v.length = static_cast<std::size_t>(std::lround(u(2.0, 4.0) * kSampleRate));
  v.f0 = u(100.0, 300.0);
  v.vibrato_depth = u(0.01, 0.03);
  v.vibrato_rate = u(4.0, 6.0);
  v.vibrato_phase = u(0.0, kTwoPi);
  const int harmonics = std::uniform_int_distribution<int>(3, 6)(rng);
  const double tilt = u(0.7, 1.3);
  for (int k = 1; k <= harmonics; ++k) {
    v.partial_gain.push_back(std::pow(static_cast<double>(k), -tilt));
    v.partial_phase.push_back(u(0.0, kTwoPi));
  }
  v.syllable_rate = u(2.5, 5.0);
  v.syllable_phase = u(0.0, kTwoPi);
  v.syllable_depth = u(0.5, 0.9);
  v.peak = u(0.3, 0.8);
  v.noise_level = u(0.005, 0.02);
  return v;
}

void normalize_peak(std::vector<double>& x, double peak) {
  double mx = 0.0;
  for (double s : x) mx = std::max(mx, std::abs(s));
  if (mx > 0) {
    for (double& s : x) s *= peak / mx;
  }
}

// Harmonic voice with partial frequencies remapped by the synthesis params.
std::vector<double> render_voice(const Voice& v, const SynthesisParams& p) {
  std::vector<double> out(v.length, 0.0);
  const double nyquist_guard = 0.45 * kSampleRate;
  std::vector<double> phase = v.partial_phase;
  const double fade = 0.03 * kSampleRate;
  for (std::size_t n = 0; n < v.length; ++n) {
    const double t = static_cast<double>(n) / kSampleRate;
    const double f = v.f0 * (1.0 + v.vibrato_depth * std::sin(kTwoPi * v.vibrato_rate * t + v.vibrato_phase));
    double s = 0.0;
    for (std::size_t k = 0; k < phase.size(); ++k) {
      const double kk = static_cast<double>(k + 1);
      const double fk = kk * f * (1.0 + p.detune_stretch * (kk - 1.0)) + p.formant_shift_hz;
      if (fk > 20.0 && fk < nyquist_guard) s += v.partial_gain[k] * std::sin(phase[k]);
      phase[k] += kTwoPi * fk / kSampleRate;
    }
    const double env = 1.0 - v.syllable_depth *
                                 (0.5 + 0.5 * std::cos(kTwoPi * v.syllable_rate * t + v.syllable_phase));
    const double edge = std::min({1.0, n / fade, (v.length - 1 - n) / fade});
    out[n] = s * env * edge;
  }
  return out;
}

// Short-time resynthesis with the magnitude kept and every phase redrawn.
std::vector<double> randomize_phase(const std::vector<double>& x, int frame, std::mt19937_64& rng) {
  const int hop = std::max(1, frame / 4);
  std::vector<double> window(static_cast<std::size_t>(frame));
  for (int i = 0; i < frame; ++i) window[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / frame);
  std::vector<double> out(x.size(), 0.0), norm(x.size(), 0.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::vector<double> buf(static_cast<std::size_t>(frame));
  for (std::size_t start = 0; start < x.size(); start += hop) {
    for (int i = 0; i < frame; ++i) {
      const std::size_t idx = start + i;
      buf[i] = idx < x.size() ? x[idx] * window[i] : 0.0;
    }
    auto spec = audio::rfft(buf, frame);
    for (std::size_t k = 1; k + 1 < spec.size(); ++k) spec[k] = std::polar(std::abs(spec[k]), angle(rng));
    const auto frame_out = audio::irfft(spec, frame);
    for (int i = 0; i < frame; ++i) {
      const std::size_t idx = start + i;
      if (idx >= x.size()) break;
      out[idx] += frame_out[i] * window[i];
      norm[idx] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (norm[i] > 1e-3) out[i] /= norm[i];
  }
  return out;
}

// RBJ biquad low-pass, Butterworth Q, run twice for 4th order.
void lowpass(std::vector<double>& x, double cutoff_hz) {
  const double w0 = kTwoPi * cutoff_hz / kSampleRate;
  const double alpha = std::sin(w0) / (2.0 * std::numbers::sqrt2 / 2.0);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 - cw) / 2.0 / a0, b1 = (1.0 - cw) / a0, b2 = b0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
  for (int pass = 0; pass < 2; ++pass) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& s : x) {
      const double y = b0 * s + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = s;
      y2 = y1;
      y1 = y;
      s = y;
    }
  }
}

void echo(std::vector<double>& x, double delay_ms, double gain, int taps) {
  const auto delay = static_cast<std::size_t>(std::lround(delay_ms * kSampleRate / 1000.0));
  if (delay == 0 || taps <= 0) return;
  const std::vector<double> dry = x;
  double g = gain;
  for (int t = 1; t <= taps; ++t, g *= gain) {
    const std::size_t shift = delay * static_cast<std::size_t>(t);
    for (std::size_t n = shift; n < x.size(); ++n) x[n] += g * dry[n - shift];
  }
}

void add_noise(std::vector<double>& x, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, stddev);
  for (double& s : x) s += noise(rng);
}

void clip(std::vector<double>& x) {
  for (double& s : x) s = std::clamp(s, -1.0, 1.0);
}

audio::Waveform render(const Voice& v, const SpoofTypeSpec* spec, std::mt19937_64& noise_rng) {
  const SynthesisParams plain;
  const bool synthesis = spec && spec->family == Family::synthesis_like;
  std::vector<double> x = render_voice(v, synthesis ? spec->synthesis : plain);
  normalize_peak(x, v.peak);
  if (synthesis && spec->synthesis.phase_frame > 0) {
    x = randomize_phase(x, spec->synthesis.phase_frame, noise_rng);
    normalize_peak(x, v.peak);
  }
  add_noise(x, v.noise_level * v.peak, noise_rng);
  if (spec && spec->family == Family::replay_like) {
    const ReplayParams& r = spec->replay;
    if (r.lowpass_hz > 0) lowpass(x, r.lowpass_hz);
    if (r.echo_delay_ms > 0) echo(x, r.echo_delay_ms, r.echo_gain, r.echo_taps);
    if (r.compression > 0) {
      double mx = 0.0;
      for (double s : x) mx = std::max(mx, std::abs(s));
      if (mx > 0) {
        for (double& s : x) s = std::tanh(r.compression * s / mx);
      }
    }
    normalize_peak(x, v.peak);
  }
  clip(x);
  return audio::Waveform{std::move(x), kSampleRate};
}

std::vector<Utterance> generate(const SpoofTypeSpec* spec, std::size_t n, std::uint64_t seed,
                                const std::string& prefix) {
  std::vector<Utterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 voice_rng(derive_seed(seed, {i, 0}));
    std::mt19937_64 noise_rng(derive_seed(seed, {i, 1}));
    const Voice v = draw_voice(voice_rng);
    Utterance u;
    u.utt_id = prefix + "_" + std::to_string(i);
    u.label = spec ? Label::spoof : Label::genuine;
    u.type_id = spec ? spec->type_id : "-";
    u.wave = render(v, spec, noise_rng);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

std::vector<Utterance> generate_genuine(std::size_t n, std::uint64_t seed, const std::string& id_prefix) {
  return generate(nullptr, n, seed, id_prefix);
}

std::vector<Utterance> generate_spoof(const SpoofTypeSpec& spec, std::size_t n, std::uint64_t seed,
                                      const std::string& id_prefix) {
  if (spec.type_id.empty() || spec.type_id == "-") throw ConfigError("spoof type needs an id");
  if (spec.family == Family::synthesis_like && spec.synthesis.phase_frame < 0) {
    throw ConfigError("phase_frame must be non-negative");
  }
  if (spec.family == Family::replay_like && spec.replay.lowpass_hz >= kSampleRate / 2.0) {
    throw ConfigError("lowpass cutoff must be below Nyquist");
  }
  return generate(&spec, n, seed, id_prefix);
}

}  // namespace dfwf::synth
