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

#include <cstddef>
#include <random>

#include <Eigen/Dense>

#include "dfwf/audio/wav.hpp"

namespace dfwf::audio {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LfccConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_bins = 512;
  int num_filters = 20;
  int num_ceps = 20;
  bool include_deltas = true;
  int delta_width = 2;
  double log_floor = 1e-10;
  // Both off by default.
  bool pre_emphasis = false;
  double pre_emphasis_coeff = 0.97;
  bool cepstral_mean_norm = false;

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  int num_features() const { return include_deltas ? 3 * num_ceps : num_ceps; }
  // Throws ConfigError on violated invariants (num_ceps <= num_filters,
  // fft_bins >= window samples at `sample_rate`, positive sizes).
  void validate(int sample_rate = 16000) const;
};

// Feature matrix, one row per coefficient and one column per frame.
struct FeatureMatrix {
  Matrix values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool all_finite() const { return values.allFinite(); }
};

// Splits the waveform into overlapping frames (one per row) and applies a
// symmetric Hamming window. num_frames = 1 + floor((N - win) / hop).
// Throws DataError when the waveform is shorter than one window.
Matrix frame_and_window(const Waveform& wave, const LfccConfig& cfg);

// Symmetric Hamming window of the given length.
Eigen::VectorXd hamming_window(int length);

// Triangular filters linearly spaced over [0, sample_rate / 2] with 50%
// overlap; [num_filters x (fft_bins / 2 + 1)].
Matrix linear_filterbank(int num_filters, int fft_bins, int sample_rate);

// Center frequency (Hz) of each filter produced by linear_filterbank.
Eigen::VectorXd filter_centers(int num_filters, int sample_rate);

// Orthonormal DCT-II, [num_ceps x num_filters].
Matrix dct_matrix(int num_ceps, int num_filters);

// Power spectrum |X_k|^2 of each row of `frames`, zero padded to fft_bins;
// [num_frames x (fft_bins / 2 + 1)].
Matrix power_spectrum(const Matrix& frames, int fft_bins);

// Log filterbank energies [num_filters x num_frames], floored at cfg.log_floor.
Matrix log_filterbank_energies(const Waveform& wave, const LfccConfig& cfg);

// Regression deltas along the time axis (columns) with replicated edges:
//   d_t = sum_{n=1..width} n (c_{t+n} - c_{t-n}) / (2 sum n^2)
Matrix delta(const Matrix& features, int width = 2);

// Static cepstra, followed by deltas and delta-deltas when
// cfg.include_deltas is set.
FeatureMatrix lfcc(const Waveform& wave, const LfccConfig& cfg);

// Brings the matrix to exactly `target` frames: shorter inputs are tiled
// along time and truncated, longer inputs are cut to a contiguous slice whose
// start is drawn from `rng`. Throws DataError on an empty input.
FeatureMatrix normalize_duration(const FeatureMatrix& features, int target,
                                 std::mt19937_64& rng);

}  // namespace dfwf::audio
