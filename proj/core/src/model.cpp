// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/model.hpp"

#include <numeric>

#include "rgbt/error.hpp"

namespace rgbt {

void ModelConfig::finalize() {
  if (anchors.levels.empty()) {
    const auto strides = backbone.level_strides();
    anchors = AnchorSpec::pedestrian(strides);
  }
  validate();
}

void ModelConfig::validate() const {
  backbone.validate();
  backbone.validate_input(image_height, image_width);
  const AnchorSpec spec =
      anchors.levels.empty() ? AnchorSpec::pedestrian(backbone.level_strides()) : anchors;
  spec.validate();
  RGBT_REQUIRE(static_cast<int>(spec.levels.size()) == backbone.fusion_levels(),
               "anchor spec must have one entry per fused level");
  for (double v : variance) RGBT_REQUIRE(v > 0, "box variance must be positive");
  RGBT_REQUIRE(pos_iou > 0 && pos_iou <= 1, "pos_iou must be in (0, 1]");
  RGBT_REQUIRE(decode.top_k >= 1 && decode.nms_iou > 0 && decode.nms_iou <= 1,
               "invalid decode configuration");
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.finalize();
  Rng rng(derive_seed(seed, 0x6d6f64656cULL));
  backbone_ = Backbone(config_.backbone, rng);
  head_ = DetectionHead(config_.backbone.fusion_channels, config_.anchors, rng,
                        config_.backbone.init_std);
  const auto shapes = config_.backbone.level_shapes(config_.image_height, config_.image_width);
  anchors_ = generate_anchors(shapes, config_.anchors, config_.image_height, config_.image_width);
}

HeadOutput Model::forward(const Tensor& rgb, const Tensor& thermal,
                          std::span<const ModalityMask> m_rgb,
                          std::span<const ModalityMask> m_thermal, nn::Mode mode, Cache* cache) {
  RGBT_REQUIRE(rgb.height() == config_.image_height && rgb.width() == config_.image_width,
               "input size does not match the model's configured image size");
  const auto features =
      backbone_.forward(rgb, thermal, m_rgb, m_thermal, mode, cache ? &cache->backbone : nullptr);
  return head_.predict(features, cache ? &cache->head : nullptr);
}

HeadOutput Model::infer(const Tensor& rgb, const Tensor& thermal,
                        std::span<const ModalityMask> m_rgb,
                        std::span<const ModalityMask> m_thermal) const {
  RGBT_REQUIRE(rgb.height() == config_.image_height && rgb.width() == config_.image_width,
               "input size does not match the model's configured image size");
  return head_.predict(backbone_.infer(rgb, thermal, m_rgb, m_thermal));
}

void Model::backward(std::span<const double> grad_loc, std::span<const double> grad_logits,
                     const Cache& cache) {
  backbone_.backward(head_.backward(grad_loc, grad_logits, cache.head), cache.backbone);
}

std::vector<std::vector<Detection>> Model::detect(const Tensor& rgb, const Tensor& thermal,
                                                  std::span<const ModalityMask> m_rgb,
                                                  std::span<const ModalityMask> m_thermal) const {
  const HeadOutput out = infer(rgb, thermal, m_rgb, m_thermal);
  std::vector<std::vector<Detection>> result;
  for (int n = 0; n < out.batch; ++n) {
    auto dets = decode_detections(out.loc_of(n), out.logits_of(n), anchors_, config_.variance,
                                  config_.image_height, config_.image_width,
                                  config_.decode.score_threshold);
    result.push_back(nms(std::move(dets), config_.decode.nms_iou, config_.decode.top_k));
  }
  return result;
}

std::vector<nn::Parameter*> Model::parameters() {
  std::vector<nn::Parameter*> out;
  backbone_.collect(out);
  head_.collect(out);
  return out;
}

std::vector<nn::Buffer> Model::buffers() {
  std::vector<nn::Buffer> out;
  backbone_.collect_buffers(out);
  return out;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void Model::round_to_float32() {
  auto round = [](Tensor& t) {
    for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
  };
  for (auto* p : parameters()) round(p->value);
  for (auto& b : buffers()) round(*b.value);
}

LossBreakdown batch_loss(const HeadOutput& out, std::span<const AnchorTargets> targets,
                         double lambda, std::vector<double>* grad_loc,
                         std::vector<double>* grad_logits) {
  RGBT_REQUIRE(static_cast<int>(targets.size()) == out.batch, "one target set per batch item");
  const std::size_t na = static_cast<std::size_t>(out.anchors);
  const int total_pos = std::accumulate(targets.begin(), targets.end(), 0,
                                        [](int s, const AnchorTargets& t) { return s + t.num_positive; });
  if (grad_loc) grad_loc->assign(out.loc.size(), 0.0);
  if (grad_logits) grad_logits->assign(out.logits.size(), 0.0);
  double l_bbox = 0.0, l_ml = 0.0;
  for (int n = 0; n < out.batch; ++n) {
    const auto& t = targets[static_cast<std::size_t>(n)];
    RGBT_REQUIRE(t.positive.size() == na, "targets do not match the anchor count");
    std::span<double> gl, gc;
    if (grad_loc) gl = std::span<double>(grad_loc->data() + n * na * 4, na * 4);
    if (grad_logits) gc = std::span<double>(grad_logits->data() + n * na * 2, na * 2);
    l_bbox += bbox_loss(out.loc_of(n), t.offsets, t.positive, gl, total_pos);
    l_ml += multilabel_loss(out.logits_of(n), t.labels, t.positive, t.negative_pool, gc, total_pos);
  }
  if (grad_logits) {
    for (double& g : *grad_logits) g *= lambda;
  }
  return total_loss(l_bbox, l_ml, lambda);
}

std::pair<Tensor, Tensor> to_tensors(std::span<const ScenePair* const> pairs) {
  std::vector<const Image*> rgb, thermal;
  for (const auto* p : pairs) {
    rgb.push_back(&p->rgb);
    thermal.push_back(&p->thermal);
  }
  return {images_to_tensor(rgb), images_to_tensor(thermal)};
}

}  // namespace rgbt
