// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "rgbt/rng.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt::nn {

/// A trainable tensor together with its gradient and SGD momentum buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad() { grad.fill(0.0); }
};

/// Non-trainable state that is still checkpointed (normalization statistics).
struct Buffer {
  std::string name;
  Tensor* value;
};

enum class Mode { kTrain, kEval };

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int padding = -1;  // -1: (kernel - 1) / 2
  bool bias = false;
};

class Conv2d {
 public:
  struct Cache {
    Tensor input;
    std::vector<std::vector<double>> columns;  // im2col per batch item
  };

  Conv2d() = default;
  /// Weights ~ N(0, init_std^2), bias zero.
  Conv2d(std::string name, const ConvSpec& spec, Rng& rng, double init_std = 0.01);

  const ConvSpec& spec() const { return spec_; }
  int output_size(int input) const;

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  /// Accumulates weight/bias gradients and returns dL/dx.
  Tensor backward(const Tensor& grad_out, const Cache& cache);

  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }
  Parameter& bias() { return bias_; }
  void collect(std::vector<Parameter*>& out);

 private:
  bool pointwise() const { return spec_.kernel == 1 && spec_.stride == 1 && spec_.padding == 0; }
  void im2col(const double* x, int h, int w, int oh, int ow, double* col) const;
  void col2im(const double* col, int h, int w, int oh, int ow, double* dx) const;

  ConvSpec spec_;
  Parameter weight_;  // out x in x k x k
  Parameter bias_;    // 1 x out x 1 x 1, unused when !spec_.bias
};

class BatchNorm2d {
 public:
  struct Cache {
    Tensor normalized;
    std::vector<double> inv_std;
    Mode mode = Mode::kEval;
  };

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);

  /// Train mode normalizes with batch statistics and updates the running
  /// averages; eval mode uses the running averages.
  Tensor forward(const Tensor& x, Mode mode, Cache* cache = nullptr);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out, const Cache& cache);

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }
  void collect(std::vector<Parameter*>& out);
  void collect_buffers(std::vector<Buffer>& out);

 private:
  std::string name_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
};

Tensor relu(const Tensor& x);
/// dL/dx given dL/dy and the ReLU output y.
Tensor relu_backward(const Tensor& grad_out, const Tensor& output);

/// conv -> batch norm -> ReLU, the unit every stage and fusion layer is built from.
class ConvBnRelu {
 public:
  struct Cache {
    Conv2d::Cache conv;
    BatchNorm2d::Cache bn;
    Tensor output;
  };

  ConvBnRelu() = default;
  ConvBnRelu(const std::string& name, const ConvSpec& spec, Rng& rng, double init_std = 0.01);

  Tensor forward(const Tensor& x, Mode mode, Cache* cache = nullptr);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out, const Cache& cache);

  Conv2d& conv() { return conv_; }
  const Conv2d& conv() const { return conv_; }
  BatchNorm2d& norm() { return norm_; }
  void collect(std::vector<Parameter*>& out);
  void collect_buffers(std::vector<Buffer>& out);

 private:
  Conv2d conv_;
  BatchNorm2d norm_;
};

}  // namespace rgbt::nn
