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

#include <complex>
#include <span>
#include <vector>

namespace dfwf::audio {

// Real-input DFT of `input` zero padded (or truncated) to n points; returns
// the n / 2 + 1 non-negative-frequency bins. Thread-safe.
std::vector<std::complex<double>> rfft(std::span<const double> input, int n);

// Inverse of rfft for an n-point signal, scaled by 1 / n so that
// irfft(rfft(x, n), n) == x.
std::vector<double> irfft(std::span<const std::complex<double>> bins, int n);

}  // namespace dfwf::audio
