// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rgbt/attention.hpp"
#include "rgbt/layers.hpp"

namespace rgbt {

struct StageSpec {
  int out_channels = 8;
  int stride = 2;
  int depth = 1;
  int kernel = 3;
};

struct BackboneConfig {
  std::vector<StageSpec> stages;
  /// Number of stages run before the hybrid attention module; fixed at 1.
  int ha_insertion_index = 1;
  /// Fused pyramid levels, taken from the last `fusion_channels.size()` stages.
  std::vector<int> fusion_channels;
  bool hybrid_attention = true;
  int rgb_channels = 3;
  int thermal_channels = 1;
  double init_std = 0.01;

  /// 4 stages (8/16/32/64 channels, cumulative strides 4/8/16/32), fusion on
  /// the last three.
  static BackboneConfig default_config();

  void validate() const;
  int fusion_levels() const { return static_cast<int>(fusion_channels.size()); }
  int first_fused_stage() const { return static_cast<int>(stages.size()) - fusion_levels(); }
  int cumulative_stride(int stage) const;
  /// Checks divisibility of the input size by the total stride.
  void validate_input(int height, int width) const;
  /// (height, width) of each fused level for a given input size.
  std::vector<std::pair<int, int>> level_shapes(int height, int width) const;
  std::vector<int> level_strides() const;
};

/// One block of a modality branch: `depth` conv-BN-ReLU units, the first of
/// which carries the stride.
class Stage {
 public:
  struct Cache {
    std::vector<nn::ConvBnRelu::Cache> units;
  };

  Stage() = default;
  Stage(const std::string& name, int in_channels, const StageSpec& spec, Rng& rng,
        double init_std);

  Tensor forward(const Tensor& x, nn::Mode mode, Cache* cache = nullptr);
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& grad_out, const Cache& cache);
  int in_channels() const { return in_channels_; }
  void collect(std::vector<nn::Parameter*>& out);
  void collect_buffers(std::vector<nn::Buffer>& out);

 private:
  int in_channels_ = 0;
  std::vector<nn::ConvBnRelu> units_;
};

/// Concatenate RGB and thermal features along channels, then one 1x1
/// conv-BN-ReLU shared by both modalities.
class FusionLayer {
 public:
  FusionLayer() = default;
  FusionLayer(const std::string& name, int channels_per_modality, int out_channels, Rng& rng,
              double init_std);

  Tensor forward(const Tensor& f_rgb, const Tensor& f_thermal, nn::Mode mode,
                 nn::ConvBnRelu::Cache* cache = nullptr);
  Tensor infer(const Tensor& f_rgb, const Tensor& f_thermal) const;
  /// Returns (dL/df_rgb, dL/df_thermal).
  std::pair<Tensor, Tensor> backward(const Tensor& grad_out, const nn::ConvBnRelu::Cache& cache);
  int out_channels() const { return out_channels_; }
  nn::ConvBnRelu& unit() { return unit_; }
  void collect(std::vector<nn::Parameter*>& out);
  void collect_buffers(std::vector<nn::Buffer>& out);

 private:
  int channels_per_modality_ = 0;
  int out_channels_ = 0;
  nn::ConvBnRelu unit_;
};

struct PyramidFeatures {
  std::vector<Tensor> levels;
};

/// Dual-branch feature extractor: stage 1 per modality, hybrid attention on
/// the stage-1 features (masks downsampled to that grid), the remaining
/// stages per modality, and a fusion layer per pyramid level.
class Backbone {
 public:
  struct Cache {
    std::vector<Stage::Cache> rgb, thermal;
    attention::HACache ha;
    std::vector<nn::ConvBnRelu::Cache> fusion;
    std::vector<Tensor> rgb_out, thermal_out;  // per-stage outputs (post-HA for stage 1)
  };

  Backbone() = default;
  Backbone(const BackboneConfig& config, Rng& rng);

  const BackboneConfig& config() const { return config_; }

  /// `rgb`/`thermal` are N x C x H x W images scaled to [0, 1]. Masks are at
  /// image resolution, one per item (or empty for "all data present"); they
  /// are ignored when hybrid attention is disabled.
  PyramidFeatures forward(const Tensor& rgb, const Tensor& thermal,
                          std::span<const ModalityMask> m_rgb,
                          std::span<const ModalityMask> m_thermal, nn::Mode mode,
                          Cache* cache = nullptr);
  PyramidFeatures infer(const Tensor& rgb, const Tensor& thermal,
                        std::span<const ModalityMask> m_rgb,
                        std::span<const ModalityMask> m_thermal) const;
  void backward(const std::vector<Tensor>& level_grads, const Cache& cache);

  /// Current projection matrices (copied out of the parameter store).
  attention::HAParams ha_params() const;
  void set_ha_params(const attention::HAParams& params);
  Stage& rgb_stage(int i) { return rgb_[static_cast<std::size_t>(i)]; }
  Stage& thermal_stage(int i) { return thermal_[static_cast<std::size_t>(i)]; }
  FusionLayer& fusion(int level) { return fusion_[static_cast<std::size_t>(level)]; }

  void collect(std::vector<nn::Parameter*>& out);
  void collect_buffers(std::vector<nn::Buffer>& out);

 private:
  std::vector<ModalityMask> feature_masks(std::span<const ModalityMask> masks, int batch, int h,
                                          int w) const;

  BackboneConfig config_;
  std::vector<Stage> rgb_, thermal_;
  std::vector<FusionLayer> fusion_;
  // rgb Q/K/V then thermal Q/K/V, each 1 x 1 x C x C.
  std::vector<nn::Parameter> ha_;
};

}  // namespace rgbt
