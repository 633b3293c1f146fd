// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "rgbt/config.hpp"
#include "rgbt/error.hpp"

namespace rgbt {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'B', 'T', 'C', 'K', 'P', 'T'};

struct Entry {
  std::string name;
  Tensor* tensor;
};

std::vector<Entry> entries(Model& model) {
  std::vector<Entry> out;
  for (auto* p : model.parameters()) out.push_back({p->name, &p->value});
  for (auto& b : model.buffers()) out.push_back({b.name, b.value});
  return out;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Model& model,
                     const nlohmann::json& metadata) {
  const nlohmann::json model_config = model.config();
  nlohmann::json table = nlohmann::json::array();
  std::string data;
  std::set<std::string> seen;
  for (const auto& e : entries(model)) {
    if (!seen.insert(e.name).second)
      throw ValidationError("duplicate tensor name in model: " + e.name);
    const Tensor& t = *e.tensor;
    table.push_back({{"name", e.name},
                     {"shape", {t.batch(), t.channels(), t.height(), t.width()}},
                     {"offset", data.size()}});
    for (double v : t.values()) put_u32(data, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  const nlohmann::json header = {{"format", "rgbt-checkpoint"},
                                 {"version", 1},
                                 {"model_config", model_config},
                                 {"config_hash", hash_hex(config_hash(model_config))},
                                 {"metadata", metadata},
                                 {"tensors", table},
                                 {"data_bytes", data.size()}};
  const std::string header_text = header.dump();
  std::string blob(kMagic, sizeof kMagic);
  put_u32(blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;
  blob += data;

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open checkpoint for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string file = path.string();
  if (!std::filesystem::exists(path)) throw IoError(file, "checkpoint not found");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(file, "cannot open checkpoint");
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0)
    throw ParseError(file, 0, "not an rgbt checkpoint (bad magic)");
  const std::size_t header_len = get_u32(bytes + 8);
  if (blob.size() < 12 + header_len) throw ParseError(file, 0, "truncated header");

  LoadedCheckpoint result;
  try {
    result.header = nlohmann::json::parse(blob.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file, 0, std::string("invalid header: ") + e.what());
  }
  const auto& header = result.header;
  if (header.value("format", "") != "rgbt-checkpoint" || header.value("version", 0) != 1)
    throw ParseError(file, 0, "unsupported checkpoint format or version");
  const auto& model_config = header.at("model_config");
  if (header.value("config_hash", "") != hash_hex(config_hash(model_config)))
    throw ParseError(file, 0, "config hash mismatch");

  result.model = Model(model_config.get<ModelConfig>(), 0);
  const std::size_t data_start = 12 + header_len;
  const std::size_t data_bytes = blob.size() - data_start;
  std::map<std::string, Tensor*> targets;
  for (const auto& e : entries(result.model)) targets[e.name] = e.tensor;
  std::set<std::string> loaded;
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto it = targets.find(name);
    if (it == targets.end()) throw ParseError(file, 0, "unexpected tensor '" + name + "'");
    Tensor& dst = *it->second;
    const auto shape = t.at("shape").get<std::vector<int>>();
    if (shape != std::vector<int>{dst.batch(), dst.channels(), dst.height(), dst.width()})
      throw ParseError(file, 0, "shape mismatch for tensor '" + name + "'");
    const std::size_t offset = t.at("offset").get<std::size_t>();
    if (offset + dst.size() * 4 > data_bytes)
      throw ParseError(file, 0, "tensor '" + name + "' extends past end of file");
    const unsigned char* p = bytes + data_start + offset;
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst.values()[i] = static_cast<double>(std::bit_cast<float>(get_u32(p + 4 * i)));
    loaded.insert(name);
  }
  if (loaded.size() != targets.size()) throw ParseError(file, 0, "checkpoint is missing tensors");
  return result;
}

}  // namespace rgbt
