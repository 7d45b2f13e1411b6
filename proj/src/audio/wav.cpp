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

#include "dfwf/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dfwf/binary_io.hpp"
#include "dfwf/error.hpp"

namespace dfwf::audio {

void Waveform::validate() const {
  if (samples.empty()) throw ConfigError("waveform is empty");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
}

namespace {

std::string read_tag(std::istream& in) {
  char tag[4];
  if (!in.read(tag, 4)) throw DataError("unexpected end of file");
  return std::string(tag, 4);
}

}  // namespace

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file " + path.string());
  const std::string where = "WAV file " + path.string();

  if (read_tag(in) != "RIFF") throw DataError(where + ": not a RIFF file");
  io::read_le<std::uint32_t>(in);
  if (read_tag(in) != "WAVE") throw DataError(where + ": not a WAVE file");

  bool have_fmt = false;
  Waveform wave;
  while (true) {
    std::string tag;
    try {
      tag = read_tag(in);
    } catch (const DataError&) {
      throw DataError(where + ": no data chunk");
    }
    const auto chunk_size = io::read_le<std::uint32_t>(in);
    if (tag == "fmt ") {
      if (chunk_size < 16) throw DataError(where + ": truncated fmt chunk");
      const auto format = io::read_le<std::uint16_t>(in);
      const auto channels = io::read_le<std::uint16_t>(in);
      const auto rate = io::read_le<std::uint32_t>(in);
      io::read_le<std::uint32_t>(in);  // byte rate
      io::read_le<std::uint16_t>(in);  // block align
      const auto bits = io::read_le<std::uint16_t>(in);
      in.ignore(chunk_size - 16 + (chunk_size & 1));
      if (format != 1) {
        throw DataError(where + ": unsupported encoding (format tag " + std::to_string(format) +
                        "), only 16-bit PCM is supported");
      }
      if (channels != 1) {
        throw DataError(where + ": expected mono audio, found " + std::to_string(channels) +
                        " channels");
      }
      if (bits != 16) {
        throw DataError(where + ": expected 16-bit samples, found " + std::to_string(bits));
      }
      wave.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw DataError(where + ": data chunk precedes fmt chunk");
      const std::size_t n = chunk_size / 2;
      wave.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(io::read_le<std::uint16_t>(in));
        wave.samples[i] = raw / 32768.0;
      }
      return wave;
    } else {
      in.ignore(chunk_size + (chunk_size & 1));
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write WAV file " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  io::write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  io::write_le<std::uint32_t>(out, 16);
  io::write_le<std::uint16_t>(out, 1);
  io::write_le<std::uint16_t>(out, 1);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  io::write_le<std::uint16_t>(out, 2);
  io::write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  io::write_le<std::uint32_t>(out, data_bytes);
  for (double s : wave.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!out) throw DataError("failed writing WAV file " + path.string());
}

}  // namespace dfwf::audio
