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
#include <string>
#include <vector>

#include "dfwf/label.hpp"
#include "dfwf/synth/benchmark.hpp"

namespace dfwf::synth {

// One line of an ASVspoof-style countermeasure protocol:
//   speaker utt env attack key
// where env is "-" for logical-access data, attack is "-" for bona fide
// speech, and key is bonafide or spoof.
struct ProtocolEntry {
  std::string speaker_id;
  std::string utt_id;
  std::string env = "-";
  std::string attack_id = "-";
  Label label = Label::genuine;

  friend bool operator==(const ProtocolEntry&, const ProtocolEntry&) = default;
};

// Throws DataError with the 1-based line number on a wrong column count, an
// unknown key, or a key that disagrees with the attack column.
std::vector<ProtocolEntry> parse_protocol(const std::filesystem::path& path);
std::vector<ProtocolEntry> parse_protocol_text(const std::string& text, const std::string& source = "<text>");

std::string format_protocol_line(const ProtocolEntry& e);
void write_protocol(const std::filesystem::path& path, const std::vector<ProtocolEntry>& entries);

// Reads <wav_dir>/<utt_id>.wav for every protocol entry.
std::vector<Utterance> load_protocol_split(const std::filesystem::path& protocol,
                                           const std::filesystem::path& wav_dir);

// Writes <root>/<task>/<split>/<utt>.wav and <root>/<task>/<split>.protocol.txt
// for every task and split.
void dump_dataset(const std::vector<WaveTask>& tasks, const std::filesystem::path& root);

}  // namespace dfwf::synth
