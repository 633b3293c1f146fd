// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rgbt/error.hpp"

namespace rgbt {

Tensor::Tensor(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
  RGBT_REQUIRE(n >= 1 && c >= 1 && h >= 1 && w >= 1,
               "tensor dimensions must be positive, got " + std::to_string(n) + "x" +
                   std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w));
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

std::string Tensor::shape_string() const {
  return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
         std::to_string(w_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  RGBT_REQUIRE(same_shape(other), "tensor add: shape mismatch " + shape_string() + " vs " +
                                      other.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor Tensor::slice(int n) const {
  RGBT_REQUIRE(n >= 0 && n < n_, "tensor slice out of range");
  Tensor out(1, c_, h_, w_);
  std::memcpy(out.data(), item(n), sizeof(double) * out.size());
  return out;
}

Tensor Tensor::concat_channels(const Tensor& a, const Tensor& b) {
  RGBT_REQUIRE(a.n_ == b.n_ && a.h_ == b.h_ && a.w_ == b.w_,
               "concat: spatial/batch mismatch " + a.shape_string() + " vs " + b.shape_string());
  Tensor out(a.n_, a.c_ + b.c_, a.h_, a.w_);
  const std::size_t sa = static_cast<std::size_t>(a.c_) * a.plane_size();
  const std::size_t sb = static_cast<std::size_t>(b.c_) * b.plane_size();
  for (int n = 0; n < a.n_; ++n) {
    std::memcpy(out.item(n), a.item(n), sizeof(double) * sa);
    std::memcpy(out.item(n) + sa, b.item(n), sizeof(double) * sb);
  }
  return out;
}

ModalityMask::ModalityMask(int h, int w, std::uint8_t fill, MaskResolution res)
    : h_(h), w_(w), res_(res) {
  RGBT_REQUIRE(h >= 1 && w >= 1, "mask dimensions must be positive");
  RGBT_REQUIRE(fill <= 1, "mask fill must be 0 or 1");
  data_.assign(static_cast<std::size_t>(h) * w, fill);
}

ModalityMask::ModalityMask(int h, int w, std::vector<std::uint8_t> values, MaskResolution res)
    : h_(h), w_(w), res_(res), data_(std::move(values)) {
  RGBT_REQUIRE(h >= 1 && w >= 1, "mask dimensions must be positive");
  RGBT_REQUIRE(data_.size() == static_cast<std::size_t>(h) * w,
               "mask data size does not match its dimensions");
  for (auto v : data_) RGBT_REQUIRE(v <= 1, "mask values must be exactly 0 or 1");
}

void ModalityMask::fill_rect(int y0, int y1, int x0, int x1, bool on) {
  y0 = std::max(y0, 0);
  x0 = std::max(x0, 0);
  y1 = std::min(y1, h_);
  x1 = std::min(x1, w_);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) set(y, x, on);
}

bool ModalityMask::all_ones() const {
  return std::all_of(data_.begin(), data_.end(), [](auto v) { return v == 1; });
}

bool ModalityMask::all_zeros() const {
  return std::all_of(data_.begin(), data_.end(), [](auto v) { return v == 0; });
}

std::size_t ModalityMask::count_ones() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

}  // namespace rgbt
