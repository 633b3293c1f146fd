// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "rgbt/error.hpp"

namespace rgbt::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

}  // namespace

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.batch(), value.channels(), value.height(), value.width()),
      velocity(value.batch(), value.channels(), value.height(), value.width()) {}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, const ConvSpec& spec, Rng& rng, double init_std) : spec_(spec) {
  RGBT_REQUIRE(spec.in_channels >= 1 && spec.out_channels >= 1, "conv: channels must be positive");
  RGBT_REQUIRE(spec.kernel >= 1 && spec.stride >= 1, "conv: kernel and stride must be positive");
  if (spec_.padding < 0) spec_.padding = (spec_.kernel - 1) / 2;
  Tensor w(spec.out_channels, spec.in_channels, spec.kernel, spec.kernel);
  std::normal_distribution<double> dist(0.0, init_std);
  for (double& v : w.values()) v = dist(rng);
  weight_ = Parameter(name + ".weight", std::move(w));
  if (spec.bias) bias_ = Parameter(name + ".bias", Tensor(1, spec.out_channels, 1, 1));
}

int Conv2d::output_size(int input) const {
  return (input + 2 * spec_.padding - spec_.kernel) / spec_.stride + 1;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (spec_.bias) out.push_back(&bias_);
}

void Conv2d::im2col(const double* x, int h, int w, int oh, int ow, double* col) const {
  const int k = spec_.kernel, s = spec_.stride, p = spec_.padding;
  const int positions = oh * ow;
  for (int c = 0; c < spec_.in_channels; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * positions;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - p + ky;
          double* dst = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - p + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void Conv2d::col2im(const double* col, int h, int w, int oh, int ow, double* dx) const {
  const int k = spec_.kernel, s = spec_.stride, p = spec_.padding;
  const int positions = oh * ow;
  for (int c = 0; c < spec_.in_channels; ++c) {
    double* plane = dx + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * positions;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * w;
          const double* src = row + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - p + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
  RGBT_REQUIRE(x.channels() == spec_.in_channels,
               weight_.name + ": expected " + std::to_string(spec_.in_channels) +
                   " input channels, got " + x.shape_string());
  const int h = x.height(), w = x.width();
  const int oh = output_size(h), ow = output_size(w);
  RGBT_REQUIRE(oh >= 1 && ow >= 1, weight_.name + ": input " + x.shape_string() + " too small");
  const int kdim = spec_.in_channels * spec_.kernel * spec_.kernel;
  const int positions = oh * ow;

  Tensor out(x.batch(), spec_.out_channels, oh, ow);
  const ConstMap wmat(weight_.value.data(), spec_.out_channels, kdim);
  if (cache) {
    cache->input = x;
    cache->columns.clear();
  }
  std::vector<double> col;
  for (int n = 0; n < x.batch(); ++n) {
    Map y(out.item(n), spec_.out_channels, positions);
    if (pointwise()) {
      y.noalias() = wmat * ConstMap(x.item(n), kdim, positions);
    } else {
      col.resize(static_cast<std::size_t>(kdim) * positions);
      im2col(x.item(n), h, w, oh, ow, col.data());
      y.noalias() = wmat * ConstMap(col.data(), kdim, positions);
      if (cache) cache->columns.push_back(col);
    }
    if (spec_.bias) {
      for (int c = 0; c < spec_.out_channels; ++c) y.row(c).array() += bias_.value.data()[c];
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out, const Cache& cache) {
  const Tensor& x = cache.input;
  const int h = x.height(), w = x.width();
  const int oh = grad_out.height(), ow = grad_out.width();
  const int kdim = spec_.in_channels * spec_.kernel * spec_.kernel;
  const int positions = oh * ow;

  Tensor dx(x.batch(), x.channels(), h, w);
  const ConstMap wmat(weight_.value.data(), spec_.out_channels, kdim);
  Map dw(weight_.grad.data(), spec_.out_channels, kdim);
  std::vector<double> dcol;
  for (int n = 0; n < x.batch(); ++n) {
    const ConstMap dy(grad_out.item(n), spec_.out_channels, positions);
    if (spec_.bias) {
      for (int c = 0; c < spec_.out_channels; ++c) {
        const double* row = grad_out.item(n) + static_cast<std::ptrdiff_t>(c) * positions;
        bias_.grad.data()[c] += std::accumulate(row, row + positions, 0.0);
      }
    }
    if (pointwise()) {
      const ConstMap xin(x.item(n), kdim, positions);
      dw.noalias() += dy * xin.transpose();
      Map(dx.item(n), kdim, positions).noalias() = wmat.transpose() * dy;
    } else {
      const ConstMap col(cache.columns[static_cast<std::size_t>(n)].data(), kdim, positions);
      dw.noalias() += dy * col.transpose();
      dcol.resize(static_cast<std::size_t>(kdim) * positions);
      Map(dcol.data(), kdim, positions).noalias() = wmat.transpose() * dy;
      col2im(dcol.data(), h, w, oh, ow, dx.item(n));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : name_(std::move(name)),
      momentum_(momentum),
      eps_(eps),
      gamma_(name_ + ".gamma", Tensor(1, channels, 1, 1, 1.0)),
      beta_(name_ + ".beta", Tensor(1, channels, 1, 1, 0.0)),
      running_mean_(1, channels, 1, 1, 0.0),
      running_var_(1, channels, 1, 1, 1.0) {}

void BatchNorm2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::collect_buffers(std::vector<Buffer>& out) {
  out.push_back({name_ + ".running_mean", &running_mean_});
  out.push_back({name_ + ".running_var", &running_var_});
}

Tensor BatchNorm2d::infer(const Tensor& x) const {
  const int channels = gamma_.value.channels();
  RGBT_REQUIRE(x.channels() == channels, name_ + ": channel mismatch " + x.shape_string());
  Tensor out = x;
  const int plane = x.plane_size();
  for (int c = 0; c < channels; ++c) {
    const double inv = 1.0 / std::sqrt(running_var_.data()[c] + eps_);
    const double g = gamma_.value.data()[c] * inv;
    const double b = beta_.value.data()[c] - running_mean_.data()[c] * g;
    for (int n = 0; n < x.batch(); ++n) {
      double* p = out.item(n) + static_cast<std::size_t>(c) * plane;
      for (int i = 0; i < plane; ++i) p[i] = p[i] * g + b;
    }
  }
  return out;
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, Cache* cache) {
  const int channels = gamma_.value.channels();
  RGBT_REQUIRE(x.channels() == channels, name_ + ": channel mismatch " + x.shape_string());
  const int plane = x.plane_size();
  const double count = static_cast<double>(x.batch()) * plane;

  std::vector<double> mean(static_cast<std::size_t>(channels));
  std::vector<double> var(static_cast<std::size_t>(channels));
  if (mode == Mode::kTrain) {
    for (int c = 0; c < channels; ++c) {
      double s = 0.0;
      for (int n = 0; n < x.batch(); ++n) {
        const double* p = x.item(n) + static_cast<std::size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) s += p[i];
      }
      const double m = s / count;
      double v = 0.0;
      for (int n = 0; n < x.batch(); ++n) {
        const double* p = x.item(n) + static_cast<std::size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) v += (p[i] - m) * (p[i] - m);
      }
      mean[c] = m;
      var[c] = v / count;
      const double unbiased = count > 1 ? v / (count - 1) : var[c];
      running_mean_.data()[c] = (1 - momentum_) * running_mean_.data()[c] + momentum_ * m;
      running_var_.data()[c] = (1 - momentum_) * running_var_.data()[c] + momentum_ * unbiased;
    }
  } else {
    for (int c = 0; c < channels; ++c) {
      mean[c] = running_mean_.data()[c];
      var[c] = running_var_.data()[c];
    }
  }

  Tensor out(x.batch(), channels, x.height(), x.width());
  Tensor normalized(x.batch(), channels, x.height(), x.width());
  std::vector<double> inv_std(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps_);
    const double g = gamma_.value.data()[c];
    const double b = beta_.value.data()[c];
    for (int n = 0; n < x.batch(); ++n) {
      const std::size_t off = static_cast<std::size_t>(c) * plane;
      const double* p = x.item(n) + off;
      double* q = normalized.item(n) + off;
      double* o = out.item(n) + off;
      for (int i = 0; i < plane; ++i) {
        q[i] = (p[i] - mean[c]) * inv_std[c];
        o[i] = q[i] * g + b;
      }
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, const Cache& cache) {
  const int channels = gamma_.value.channels();
  const int plane = grad_out.plane_size();
  const double count = static_cast<double>(grad_out.batch()) * plane;
  Tensor dx(grad_out.batch(), channels, grad_out.height(), grad_out.width());
  for (int c = 0; c < channels; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * plane;
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < grad_out.batch(); ++n) {
      const double* dy = grad_out.item(n) + off;
      const double* xh = cache.normalized.item(n) + off;
      for (int i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    gamma_.grad.data()[c] += sum_dy_xhat;
    beta_.grad.data()[c] += sum_dy;
    const double g = gamma_.value.data()[c];
    const double inv = cache.inv_std[static_cast<std::size_t>(c)];
    for (int n = 0; n < grad_out.batch(); ++n) {
      const double* dy = grad_out.item(n) + off;
      const double* xh = cache.normalized.item(n) + off;
      double* d = dx.item(n) + off;
      if (cache.mode == Mode::kTrain) {
        for (int i = 0; i < plane; ++i) {
          d[i] = g * inv * (dy[i] - sum_dy / count - xh[i] * sum_dy_xhat / count);
        }
      } else {
        for (int i = 0; i < plane; ++i) d[i] = g * inv * dy[i];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- ReLU

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& output) {
  Tensor dx = grad_out;
  auto d = dx.values();
  const auto y = output.values();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (y[i] <= 0.0) d[i] = 0.0;
  }
  return dx;
}

// ---------------------------------------------------------------- ConvBnRelu

ConvBnRelu::ConvBnRelu(const std::string& name, const ConvSpec& spec, Rng& rng, double init_std)
    : conv_(name + ".conv", spec, rng, init_std), norm_(name + ".bn", spec.out_channels) {}

Tensor ConvBnRelu::forward(const Tensor& x, Mode mode, Cache* cache) {
  Tensor y = conv_.forward(x, cache ? &cache->conv : nullptr);
  y = norm_.forward(y, mode, cache ? &cache->bn : nullptr);
  y = relu(y);
  if (cache) cache->output = y;
  return y;
}

Tensor ConvBnRelu::infer(const Tensor& x) const { return relu(norm_.infer(conv_.forward(x))); }

Tensor ConvBnRelu::backward(const Tensor& grad_out, const Cache& cache) {
  Tensor d = relu_backward(grad_out, cache.output);
  d = norm_.backward(d, cache.bn);
  return conv_.backward(d, cache.conv);
}

void ConvBnRelu::collect(std::vector<Parameter*>& out) {
  conv_.collect(out);
  norm_.collect(out);
}

void ConvBnRelu::collect_buffers(std::vector<Buffer>& out) { norm_.collect_buffers(out); }

}  // namespace rgbt::nn
