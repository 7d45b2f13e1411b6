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

#include "dfwf/audio/fft.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "dfwf/error.hpp"

namespace dfwf::audio {

namespace {

// fftw planning is not thread-safe; plans are created once per size under a
// lock and executed through the new-array interface, which is.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(spec);
  return cache.emplace(n, p).first->second;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> input, int n) {
  if (n < 1) throw ConfigError("FFT size must be positive");
  std::vector<double> buf(static_cast<std::size_t>(n), 0.0);
  std::copy_n(input.begin(), std::min<std::size_t>(input.size(), buf.size()), buf.begin());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(plans_for(n).forward, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, int n) {
  if (n < 1) throw ConfigError("FFT size must be positive");
  if (bins.size() != static_cast<std::size_t>(n / 2 + 1)) throw ConfigError("irfft: wrong bin count");
  std::vector<std::complex<double>> spec(bins.begin(), bins.end());
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_execute_dft_c2r(plans_for(n).inverse, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  for (double& v : out) v /= n;
  return out;
}

}  // namespace dfwf::audio
