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

#include "dfwf/synth/protocol.hpp"

#include <fstream>
#include <sstream>

#include "dfwf/error.hpp"

namespace dfwf::synth {

std::vector<ProtocolEntry> parse_protocol_text(const std::string& text, const std::string& source) {
  std::vector<ProtocolEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(f);
    if (cols.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    if (cols.size() != 5) throw fail("expected 5 columns, got " + std::to_string(cols.size()));
    ProtocolEntry e{cols[0], cols[1], cols[2], cols[3], Label::genuine};
    if (cols[4] == "bonafide") {
      e.label = Label::genuine;
    } else if (cols[4] == "spoof") {
      e.label = Label::spoof;
    } else {
      throw fail("unknown key '" + cols[4] + "'");
    }
    if ((e.attack_id == "-") != (e.label == Label::genuine)) {
      throw fail("key '" + cols[4] + "' inconsistent with attack '" + e.attack_id + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ProtocolEntry> parse_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open protocol " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_protocol_text(ss.str(), path.string());
}

std::string format_protocol_line(const ProtocolEntry& e) {
  return e.speaker_id + " " + e.utt_id + " " + e.env + " " + e.attack_id + " " +
         (e.label == Label::genuine ? "bonafide" : "spoof");
}

void write_protocol(const std::filesystem::path& path, const std::vector<ProtocolEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write protocol " + path.string());
  for (const auto& e : entries) out << format_protocol_line(e) << '\n';
  if (!out) throw DataError("failed writing protocol " + path.string());
}

std::vector<Utterance> load_protocol_split(const std::filesystem::path& protocol,
                                           const std::filesystem::path& wav_dir) {
  std::vector<Utterance> out;
  for (const auto& e : parse_protocol(protocol)) {
    Utterance u;
    u.utt_id = e.utt_id;
    u.label = e.label;
    u.type_id = e.attack_id;
    u.wave = audio::load_wav(wav_dir / (e.utt_id + ".wav"));
    out.push_back(std::move(u));
  }
  return out;
}

void dump_dataset(const std::vector<WaveTask>& tasks, const std::filesystem::path& root) {
  for (const auto& task : tasks) {
    const std::pair<const char*, const std::vector<Utterance>*> splits[] = {
        {"train", &task.train}, {"dev", &task.dev}, {"eval", &task.eval}};
    for (const auto& [name, utts] : splits) {
      const auto dir = root / task.task_id / name;
      std::filesystem::create_directories(dir);
      std::vector<ProtocolEntry> entries;
      for (const auto& u : *utts) {
        audio::write_wav(dir / (u.utt_id + ".wav"), u.wave);
        entries.push_back({"SYN", u.utt_id, "-", u.label == Label::genuine ? "-" : u.type_id, u.label});
      }
      write_protocol(root / task.task_id / (std::string(name) + ".protocol.txt"), entries);
    }
  }
}

}  // namespace dfwf::synth
