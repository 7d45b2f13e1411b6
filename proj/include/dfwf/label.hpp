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
#include <string_view>

#include "dfwf/error.hpp"

namespace dfwf {

// Class index used by the classifier head: genuine (bona fide) speech is
// class 0, spoofed speech class 1.
enum class Label : std::uint8_t { genuine = 0, spoof = 1 };

inline int class_index(Label l) { return static_cast<int>(l); }

inline std::string_view to_string(Label l) {
  return l == Label::genuine ? "genuine" : "spoof";
}

// Accepts both the score-file spelling ("genuine") and the ASVspoof protocol
// spelling ("bonafide").
inline Label parse_label(std::string_view s) {
  if (s == "genuine" || s == "bonafide") return Label::genuine;
  if (s == "spoof") return Label::spoof;
  throw DataError("unknown label '" + std::string(s) + "'");
}

}  // namespace dfwf
