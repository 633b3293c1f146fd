// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rgbt/rng.hpp"
#include "rgbt/tensor.hpp"

/// Hybrid attention between an RGB and a thermal feature map.
///
/// Each modality's features are multiplied by its availability mask, projected
/// to queries/keys/values by bias-free 1x1 convolutions, and attended with the
/// *sum* of both queries. Where both sensors see the scene the query mixes
/// both modalities (cross-attention); where one is blacked out its query is
/// exactly zero and the other modality's query alone drives the attention
/// (self-attention). The attended features are added back residually.
///
/// Tokens are the row-major flattened (y, x) positions; logits are scaled by
/// 1/sqrt(C) and the softmax runs over keys with max subtraction.
namespace rgbt::attention {

using Matrix = Eigen::MatrixXd;

/// Bias-free 1x1 projections for one modality. Each matrix is C x C and maps
/// a channel vector f(x) to W * f(x).
struct Projection {
  Matrix query;
  Matrix key;
  Matrix value;

  int channels() const { return static_cast<int>(query.rows()); }
  bool all_finite() const;
};

struct HAParams {
  Projection rgb;
  Projection thermal;

  static HAParams identity(int channels);
  static HAParams zeros(int channels);
  /// Entries drawn from N(0, stddev^2).
  static HAParams random(int channels, Rng& rng, double stddev);

  int channels() const { return rgb.channels(); }
  void validate() const;
};

struct QKV {
  Tensor query;
  Tensor key;
  Tensor value;
};

/// Area-average a binary image-resolution mask onto a coarser grid and
/// threshold at 0.5 (exact ties become 1). Uses exact integer arithmetic.
ModalityMask downsample_mask(const ModalityMask& mask, int target_h, int target_w);

/// out[n,c,y,x] = m_n[y,x] * f[n,c,y,x]. `masks` holds either one mask per
/// batch item or a single mask broadcast over the batch.
Tensor apply_mask(const Tensor& features, std::span<const ModalityMask> masks);
Tensor apply_mask(const Tensor& features, const ModalityMask& mask);

QKV project_qkv(const Tensor& features, const Projection& proj);

/// Element-wise Q_rgb + Q_thermal.
Tensor combined_query(const Tensor& q_rgb, const Tensor& q_thermal);

/// softmax(Q^T K / sqrt(C)) applied to V, per batch item.
/// When `attention_out` is non-null it receives one N x N row-stochastic
/// matrix per batch item.
Tensor attend(const Tensor& query, const Tensor& key, const Tensor& value,
              std::vector<Matrix>* attention_out = nullptr);

/// Intermediate values kept by the forward pass for the backward pass.
struct HACache {
  Tensor masked_rgb, masked_thermal;  // f = M (x) F
  QKV rgb, thermal;
  Tensor combined;                    // Q_c
  std::vector<Matrix> attn_rgb, attn_thermal;
  std::vector<ModalityMask> mask_rgb, mask_thermal;
};

struct HAOutput {
  Tensor rgb;      // f'_rgb = f_rgb + f*_rgb
  Tensor thermal;  // f'_thermal = f_thermal + f*_thermal
};

/// Full hybrid attention module. Masks must be at feature resolution, one per
/// batch item or a single broadcast mask.
HAOutput hybrid_attention(const Tensor& f_rgb, const Tensor& f_thermal,
                          std::span<const ModalityMask> m_rgb,
                          std::span<const ModalityMask> m_thermal, const HAParams& params,
                          HACache* cache = nullptr);

/// Single-modality masked self-attention with the same projections:
/// f + softmax(Q^T K / sqrt(C)) V where Q, K, V all come from f.
Tensor self_attention(const Tensor& features, std::span<const ModalityMask> mask,
                      const Projection& proj);

struct HAGrads {
  Tensor d_rgb;      // dL/dF_rgb (pre-mask input)
  Tensor d_thermal;  // dL/dF_thermal
  Projection d_params_rgb;
  Projection d_params_thermal;
};

/// Backward pass through hybrid_attention given dL/df'_rgb and dL/df'_thermal.
HAGrads hybrid_attention_backward(const HACache& cache, const Tensor& grad_rgb,
                                  const Tensor& grad_thermal, const HAParams& params);

}  // namespace rgbt::attention
