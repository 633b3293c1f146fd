// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "rgbt/backbone.hpp"
#include "rgbt/data.hpp"
#include "rgbt/detection.hpp"
#include "rgbt/losses.hpp"

namespace rgbt {

struct ModelConfig {
  BackboneConfig backbone = BackboneConfig::default_config();
  AnchorSpec anchors;  // empty: pedestrian anchors at the fused level strides
  BoxOffsets variance{0.1, 0.1, 0.2, 0.2};
  int image_height = 64;
  int image_width = 96;
  double pos_iou = 0.5;
  BlackoutLabel blackout_label = BlackoutLabel::kIgnore;
  DecodeConfig decode;

  /// Fills in derived defaults and checks consistency.
  void finalize();
  void validate() const;
};

/// Backbone, detection head and the fixed anchor set for one input size.
class Model {
 public:
  struct Cache {
    Backbone::Cache backbone;
    DetectionHead::Cache head;
  };

  Model() = default;
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<Box>& anchors() const { return anchors_; }
  int num_anchors() const { return static_cast<int>(anchors_.size()); }
  Backbone& backbone() { return backbone_; }
  DetectionHead& head() { return head_; }

  /// Masks are at image resolution; an empty span means all-ones.
  HeadOutput forward(const Tensor& rgb, const Tensor& thermal, std::span<const ModalityMask> m_rgb,
                     std::span<const ModalityMask> m_thermal, nn::Mode mode,
                     Cache* cache = nullptr);
  HeadOutput infer(const Tensor& rgb, const Tensor& thermal, std::span<const ModalityMask> m_rgb,
                   std::span<const ModalityMask> m_thermal) const;
  void backward(std::span<const double> grad_loc, std::span<const double> grad_logits,
                const Cache& cache);

  /// Per-image detections after score threshold and NMS.
  std::vector<std::vector<Detection>> detect(const Tensor& rgb, const Tensor& thermal,
                                             std::span<const ModalityMask> m_rgb,
                                             std::span<const ModalityMask> m_thermal) const;

  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Buffer> buffers();
  void zero_grad();
  /// Rounds every weight and buffer to the nearest float32 value, so that a
  /// float32 checkpoint reproduces the in-memory model exactly.
  void round_to_float32();

 private:
  ModelConfig config_;
  Backbone backbone_;
  DetectionHead head_;
  std::vector<Box> anchors_;
};

/// Loss over a batch; both terms are normalized by the batch's total number
/// of positive anchors. Gradients, when requested, are written (not added).
LossBreakdown batch_loss(const HeadOutput& out, std::span<const AnchorTargets> targets,
                         double lambda, std::vector<double>* grad_loc = nullptr,
                         std::vector<double>* grad_logits = nullptr);

/// Stacks the images of `pairs` into RGB and thermal tensors.
std::pair<Tensor, Tensor> to_tensors(std::span<const ScenePair* const> pairs);

}  // namespace rgbt
