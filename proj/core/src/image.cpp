// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "rgbt/error.hpp"

namespace rgbt {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError(path.string(), mode[0] == 'w' ? "cannot open for writing" : "cannot open");
  return f;
}

void write_rows(const std::filesystem::path& path, int width, int height, int bit_depth,
                int color_type, const std::vector<std::vector<png_byte>>& rows) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), "PNG encoding failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  RGBT_REQUIRE(image.channels == 1 || image.channels == 3, "PNG writer supports 1 or 3 channels");
  std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(image.height));
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  for (int y = 0; y < image.height; ++y) {
    const auto* begin = image.pixels.data() + static_cast<std::size_t>(y) * stride;
    rows[static_cast<std::size_t>(y)].assign(begin, begin + stride);
  }
  write_rows(path, image.width, image.height, 8,
             image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, rows);
}

Image read_png(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "PNG decoding failed");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img(static_cast<int>(png_get_image_height(png, info)),
            static_cast<int>(png_get_image_width(png, info)),
            static_cast<int>(png_get_channels(png, info)));
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] =
        img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_mask_png(const std::filesystem::path& path, const ModalityMask& mask) {
  const int w = mask.width();
  std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(mask.height()),
                                          std::vector<png_byte>(static_cast<std::size_t>((w + 7) / 8), 0));
  for (int y = 0; y < mask.height(); ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      if (mask.at(y, x)) row[static_cast<std::size_t>(x / 8)] |= static_cast<png_byte>(0x80 >> (x % 8));
    }
  }
  write_rows(path, w, mask.height(), 1, PNG_COLOR_TYPE_GRAY, rows);
}

ModalityMask read_mask_png(const std::filesystem::path& path) {
  const Image img = read_png(path);
  RGBT_REQUIRE(img.channels == 1, path.string() + ": mask PNG must be grayscale");
  std::vector<std::uint8_t> values(img.pixels.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = img.pixels[i] >= 128 ? 1 : 0;
  return ModalityMask(img.height, img.width, std::move(values));
}

Tensor images_to_tensor(const std::vector<const Image*>& images) {
  RGBT_REQUIRE(!images.empty(), "images_to_tensor: empty batch");
  const Image& first = *images.front();
  Tensor t(static_cast<int>(images.size()), first.channels, first.height, first.width);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    RGBT_REQUIRE(img.height == first.height && img.width == first.width &&
                     img.channels == first.channels,
                 "images_to_tensor: images in a batch must share dimensions");
    double* dst = t.item(static_cast<int>(n));
    const int plane = img.height * img.width;
    for (int i = 0; i < plane; ++i)
      for (int c = 0; c < img.channels; ++c)
        dst[static_cast<std::size_t>(c) * plane + i] =
            img.pixels[static_cast<std::size_t>(i) * img.channels + c] / 255.0;
  }
  return t;
}

}  // namespace rgbt
