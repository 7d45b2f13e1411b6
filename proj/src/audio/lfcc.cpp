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

#include "dfwf/audio/lfcc.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "dfwf/audio/fft.hpp"
#include "dfwf/error.hpp"

namespace dfwf::audio {

int LfccConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int LfccConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void LfccConfig::validate(int sample_rate) const {
  if (window_ms <= 0 || hop_ms <= 0) throw ConfigError("window and hop must be positive");
  if (hop_samples(sample_rate) < 1) throw ConfigError("hop shorter than one sample");
  if (num_filters < 1 || num_ceps < 1) throw ConfigError("filter and cepstrum counts must be positive");
  if (num_ceps > num_filters) throw ConfigError("num_ceps must not exceed num_filters");
  if (fft_bins < window_samples(sample_rate)) {
    throw ConfigError("fft_bins (" + std::to_string(fft_bins) + ") shorter than the window (" +
                      std::to_string(window_samples(sample_rate)) + " samples)");
  }
  if (delta_width < 1) throw ConfigError("delta width must be >= 1");
  if (!(log_floor > 0)) throw ConfigError("log_floor must be positive");
}

Eigen::VectorXd hamming_window(int length) {
  Eigen::VectorXd w(length);
  if (length == 1) {
    w(0) = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n) {
    w(n) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  }
  return w;
}

Matrix frame_and_window(const Waveform& wave, const LfccConfig& cfg) {
  wave.validate();
  const int win = cfg.window_samples(wave.sample_rate);
  const int hop = cfg.hop_samples(wave.sample_rate);
  const auto n = static_cast<long>(wave.samples.size());
  if (n < win) {
    throw DataError("waveform of " + std::to_string(n) + " samples is shorter than one window (" +
                    std::to_string(win) + ")");
  }
  std::vector<double> signal = wave.samples;
  if (cfg.pre_emphasis) {
    for (long i = n - 1; i > 0; --i) signal[i] -= cfg.pre_emphasis_coeff * signal[i - 1];
  }
  const long frames = 1 + (n - win) / hop;
  const Eigen::VectorXd window = hamming_window(win);
  Matrix out(frames, win);
  for (long f = 0; f < frames; ++f) {
    const double* src = signal.data() + f * hop;
    for (int j = 0; j < win; ++j) out(f, j) = src[j] * window(j);
  }
  return out;
}

Eigen::VectorXd filter_centers(int num_filters, int sample_rate) {
  const double nyquist = sample_rate / 2.0;
  Eigen::VectorXd c(num_filters);
  for (int m = 0; m < num_filters; ++m) c(m) = (m + 1) * nyquist / (num_filters + 1);
  return c;
}

Matrix linear_filterbank(int num_filters, int fft_bins, int sample_rate) {
  const int bins = fft_bins / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double spacing = nyquist / (num_filters + 1);
  Matrix fb = Matrix::Zero(num_filters, bins);
  for (int m = 0; m < num_filters; ++m) {
    const double left = m * spacing;
    const double center = (m + 1) * spacing;
    const double right = (m + 2) * spacing;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_bins;
      if (f > left && f < center) {
        fb(m, k) = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        fb(m, k) = (right - f) / (right - center);
      }
    }
  }
  return fb;
}

Matrix dct_matrix(int num_ceps, int num_filters) {
  Matrix d(num_ceps, num_filters);
  for (int k = 0; k < num_ceps; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / num_filters);
    for (int m = 0; m < num_filters; ++m) {
      d(k, m) = scale * std::cos(std::numbers::pi * k * (m + 0.5) / num_filters);
    }
  }
  return d;
}

Matrix power_spectrum(const Matrix& frames, int fft_bins) {
  if (frames.cols() > fft_bins) throw ConfigError("frame longer than fft_bins");
  const int bins = fft_bins / 2 + 1;
  Matrix power(frames.rows(), bins);
  std::vector<double> frame(static_cast<std::size_t>(frames.cols()));
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    for (Eigen::Index j = 0; j < frames.cols(); ++j) frame[j] = frames(f, j);
    const auto spec = rfft(frame, fft_bins);
    for (int k = 0; k < bins; ++k) power(f, k) = std::norm(spec[k]);
  }
  return power;
}

Matrix log_filterbank_energies(const Waveform& wave, const LfccConfig& cfg) {
  cfg.validate(wave.sample_rate);
  const Matrix frames = frame_and_window(wave, cfg);
  const Matrix power = power_spectrum(frames, cfg.fft_bins);
  const Matrix fb = linear_filterbank(cfg.num_filters, cfg.fft_bins, wave.sample_rate);
  Matrix energies = fb * power.transpose();
  return energies.unaryExpr([&](double e) { return std::log(std::max(e, cfg.log_floor)); });
}

Matrix delta(const Matrix& features, int width) {
  const Eigen::Index frames = features.cols();
  if (frames == 0) throw DataError("delta of an empty feature matrix");
  double denom = 0.0;
  for (int n = 1; n <= width; ++n) denom += n * n;
  denom *= 2.0;
  Matrix out = Matrix::Zero(features.rows(), frames);
  auto clamp_t = [&](Eigen::Index t) { return std::clamp<Eigen::Index>(t, 0, frames - 1); };
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int n = 1; n <= width; ++n) {
      out.col(t) += n * (features.col(clamp_t(t + n)) - features.col(clamp_t(t - n)));
    }
  }
  out /= denom;
  return out;
}

FeatureMatrix lfcc(const Waveform& wave, const LfccConfig& cfg) {
  const Matrix log_energy = log_filterbank_energies(wave, cfg);
  Matrix ceps = dct_matrix(cfg.num_ceps, cfg.num_filters) * log_energy;
  if (cfg.cepstral_mean_norm) ceps.colwise() -= ceps.rowwise().mean();
  if (!cfg.include_deltas) return FeatureMatrix{std::move(ceps)};
  const Matrix d1 = delta(ceps, cfg.delta_width);
  const Matrix d2 = delta(d1, cfg.delta_width);
  FeatureMatrix out;
  out.values.resize(3 * ceps.rows(), ceps.cols());
  out.values << ceps, d1, d2;
  return out;
}

FeatureMatrix normalize_duration(const FeatureMatrix& features, int target,
                                 std::mt19937_64& rng) {
  const Eigen::Index frames = features.cols();
  if (frames == 0 || features.rows() == 0) throw DataError("cannot normalize an empty feature matrix");
  if (target < 1) throw ConfigError("target frame count must be positive");
  if (frames == target) return features;
  FeatureMatrix out;
  if (frames < target) {
    out.values.resize(features.rows(), target);
    for (Eigen::Index j = 0; j < target; ++j) out.values.col(j) = features.values.col(j % frames);
    return out;
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, frames - target);
  const Eigen::Index start = pick(rng);
  out.values = features.values.middleCols(start, target);
  return out;
}

}  // namespace dfwf::audio
