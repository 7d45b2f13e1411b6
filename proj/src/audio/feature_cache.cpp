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

#include "dfwf/audio/feature_cache.hpp"

#include <fstream>
#include <limits>

#include "dfwf/binary_io.hpp"
#include "dfwf/error.hpp"

namespace dfwf::audio {

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features) {
  if (features.rows() > std::numeric_limits<std::uint16_t>::max()) {
    throw DataError("feature matrix has too many rows for the cache format");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature cache " + path.string());
  io::write_magic(out, "LFCC");
  io::write_le<std::uint16_t>(out, kFeatureCacheVersion);
  io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(features.rows()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      io::write_f32(out, static_cast<float>(features.values(r, c)));
    }
  }
  if (!out) throw DataError("failed writing feature cache " + path.string());
}

FeatureMatrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature cache " + path.string());
  io::expect_magic(in, "LFCC", path.string());
  const auto version = io::read_le<std::uint16_t>(in);
  if (version != kFeatureCacheVersion) {
    throw DataError(path.string() + ": unsupported feature cache version " + std::to_string(version));
  }
  const auto rows = io::read_le<std::uint16_t>(in);
  const auto cols = io::read_le<std::uint32_t>(in);
  FeatureMatrix f;
  f.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) f.values(r, c) = io::read_f32(in);
  }
  return f;
}

}  // namespace dfwf::audio
