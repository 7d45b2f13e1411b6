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
#include <filesystem>
#include <string>

#include "dfwf/model/lcnn.hpp"

namespace dfwf::model {

struct CheckpointMeta {
  std::string task_id;
  int step = 0;
  int epoch = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

// Checkpoint layout (little-endian):
//   "DFWF" | version u16 | u32 length + UTF-8 JSON {config, meta}
//   | u32 parameter count
//   | per parameter: u16 name length + name | u8 rank | u32 dims | float32 values
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  Classifier model;
  CheckpointMeta meta;
};

std::string serialize_checkpoint(const Classifier& model, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Classifier& model,
                     const CheckpointMeta& meta);
// Throws DataError for unreadable or malformed files, including parameter
// names or shapes that disagree with the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dfwf::model
