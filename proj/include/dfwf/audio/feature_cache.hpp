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

#include "dfwf/audio/lfcc.hpp"

namespace dfwf::audio {

// Binary per-utterance feature record:
//   "LFCC" | version u16 | rows u16 | cols u32 | rows*cols float32
// All integers and floats little-endian, values row-major.
inline constexpr std::uint16_t kFeatureCacheVersion = 1;

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_feature_cache(const std::filesystem::path& path);

}  // namespace dfwf::audio
