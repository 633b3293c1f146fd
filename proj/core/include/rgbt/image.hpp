// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rgbt/tensor.hpp"

namespace rgbt {

/// 8-bit interleaved (HWC) image.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int h, int w, int c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

/// Writes 8-bit gray (1 channel) or RGB (3 channels) PNG.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Masks are stored as 1-bit grayscale PNGs (white = data present).
void write_mask_png(const std::filesystem::path& path, const ModalityMask& mask);
ModalityMask read_mask_png(const std::filesystem::path& path);

/// Stacks images into an N x C x H x W tensor scaled to [0, 1].
Tensor images_to_tensor(const std::vector<const Image*>& images);

}  // namespace rgbt
