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

#include "dfwf/model/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "dfwf/binary_io.hpp"
#include "dfwf/error.hpp"

namespace dfwf::model {

std::string serialize_checkpoint(const Classifier& model, const CheckpointMeta& meta) {
  std::ostringstream out(std::ios::binary);
  io::write_magic(out, "DFWF");
  io::write_le<std::uint16_t>(out, kCheckpointVersion);
  const nlohmann::json header{{"config", model.config()},
                              {"meta",
                               {{"task_id", meta.task_id},
                                {"step", meta.step},
                                {"epoch", meta.epoch},
                                {"seed", meta.seed}}}};
  const std::string text = header.dump();
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(p.name().size()));
    out.write(p.name().data(), static_cast<std::streamsize>(p.name().size()));
    io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.shape().size()));
    for (std::size_t d : p.shape()) io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : p.tensor().values()) io::write_f32(out, v);
  }
  return std::move(out).str();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  io::expect_magic(in, "DFWF", "checkpoint");
  const auto version = io::read_le<std::uint16_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto text_len = io::read_le<std::uint32_t>(in);
  std::string text(text_len, '\0');
  if (!in.read(text.data(), text_len)) throw DataError("checkpoint: truncated header");

  nlohmann::json header;
  LcnnConfig config;
  CheckpointMeta meta;
  try {
    header = nlohmann::json::parse(text);
    config = header.at("config").get<LcnnConfig>();
    const auto& m = header.at("meta");
    meta.task_id = m.at("task_id").get<std::string>();
    meta.step = m.at("step").get<int>();
    meta.epoch = m.at("epoch").get<int>();
    meta.seed = m.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: bad config: ") + e.what());
  }

  Classifier model = [&] {
    try {
      return Classifier(config);
    } catch (const ConfigError& e) {
      throw DataError(std::string("checkpoint: bad config: ") + e.what());
    }
  }();
  const auto count = io::read_le<std::uint32_t>(in);
  if (count != model.parameters().size()) {
    throw DataError("checkpoint: " + std::to_string(count) + " parameters, config implies " +
                    std::to_string(model.parameters().size()));
  }
  for (auto& p : model.parameters()) {
    const auto name_len = io::read_le<std::uint16_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint: truncated parameter name");
    if (name != p.name()) throw DataError("checkpoint: expected parameter " + p.name() + ", found " + name);
    const auto rank = io::read_le<std::uint8_t>(in);
    ad::Shape shape(rank);
    for (auto& d : shape) d = io::read_le<std::uint32_t>(in);
    if (shape != p.shape()) {
      throw DataError("checkpoint: parameter " + name + " has shape " + ad::shape_string(shape) +
                      ", config implies " + ad::shape_string(p.shape()));
    }
    for (auto& v : p.tensor().values()) v = io::read_f32(in);
  }
  return Checkpoint{std::move(model), std::move(meta)};
}

void save_checkpoint(const std::filesystem::path& path, const Classifier& model,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(model, meta);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dfwf::model
