// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "rgbt/model.hpp"

namespace rgbt {

/// Archive layout: 8-byte magic "RGBTCKPT", little-endian u32 header length,
/// JSON header, then every tensor as little-endian float32 in header order.
/// The header holds the model config, its hash, a tensor table
/// {name, shape, offset} (offset in bytes from the start of the data block)
/// and any caller-supplied metadata.
void save_checkpoint(const std::filesystem::path& path, Model& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  Model model;
  nlohmann::json header;
};

/// Throws IoError if the file is missing or unreadable and ParseError if it is
/// malformed, truncated, or inconsistent with its own config.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rgbt
