// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace rgbt {

/// Cache-line aligned storage. Vectorized reductions peel a head that depends
/// on the start address, so a fixed alignment keeps results bit-identical
/// across runs regardless of heap layout.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

/// Dense batch x channels x height x width tensor of doubles, row-major.
/// Every feature map flowing through the network is one of these.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0);

  int batch() const { return n_; }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  /// Spatial positions per plane (height * width).
  int plane_size() const { return h_ * w_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  /// Pointer to the first element of batch item n (c*h*w contiguous values).
  double* item(int n) { return data_.data() + static_cast<std::size_t>(n) * c_ * h_ * w_; }
  const double* item(int n) const {
    return data_.data() + static_cast<std::size_t>(n) * c_ * h_ * w_;
  }

  bool same_shape(const Tensor& other) const {
    return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  std::string shape_string() const;

  void fill(double v);
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);

  /// Copies batch item `n` into a new single-item tensor.
  Tensor slice(int n) const;
  /// Concatenates along the channel axis.
  static Tensor concat_channels(const Tensor& a, const Tensor& b);

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double, AlignedAllocator<double>> data_;
};

/// Which grid a mask lives on.
enum class MaskResolution { kImage, kFeature };

/// Binary availability map for one modality: 1 where sensor data exists,
/// 0 in blackout regions.
class ModalityMask {
 public:
  ModalityMask() = default;
  ModalityMask(int h, int w, std::uint8_t fill = 1, MaskResolution res = MaskResolution::kImage);
  /// Validates that every value is 0 or 1.
  ModalityMask(int h, int w, std::vector<std::uint8_t> values,
               MaskResolution res = MaskResolution::kImage);

  static ModalityMask ones(int h, int w, MaskResolution res = MaskResolution::kImage) {
    return ModalityMask(h, w, 1, res);
  }
  static ModalityMask zeros(int h, int w, MaskResolution res = MaskResolution::kImage) {
    return ModalityMask(h, w, 0, res);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  MaskResolution resolution() const { return res_; }
  std::uint8_t at(int y, int x) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  void set(int y, int x, bool on) { data_[static_cast<std::size_t>(y) * w_ + x] = on ? 1 : 0; }
  /// Sets every cell of the half-open rectangle [y0,y1) x [x0,x1) (clipped).
  void fill_rect(int y0, int y1, int x0, int x1, bool on);
  std::span<const std::uint8_t> values() const { return data_; }

  bool all_ones() const;
  bool all_zeros() const;
  std::size_t count_ones() const;

  bool operator==(const ModalityMask& o) const {
    return h_ == o.h_ && w_ == o.w_ && data_ == o.data_;
  }

 private:
  int h_ = 0, w_ = 0;
  MaskResolution res_ = MaskResolution::kImage;
  std::vector<std::uint8_t> data_;
};

}  // namespace rgbt
