// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rgbt/backbone.hpp"
#include "rgbt/layers.hpp"

namespace rgbt {

/// Axis-aligned box in pixel coordinates, corner form.
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  Box clipped(double image_w, double image_h) const;
  bool operator==(const Box&) const = default;
};

struct GroundTruth {
  Box box;
  bool visible_rgb = true;
  bool visible_thermal = true;
  bool is_ignore = false;
  bool operator==(const GroundTruth&) const = default;
};

/// Anchor shapes per pyramid level. Each scale is the square root of the
/// anchor area; each ratio is height / width.
struct AnchorSpec {
  struct Level {
    std::vector<double> scales;
    std::vector<double> ratios;
  };
  std::vector<Level> levels;

  /// One scale per level (4x the level stride) with the tall pedestrian
  /// ratios 1/0.41, 2 and 3.
  static AnchorSpec pedestrian(std::span<const int> level_strides, double scale_per_stride = 4.0);
  int anchors_per_cell(int level) const;
  void validate() const;
};

struct Detection {
  Box box;
  double score_rgb = 0;
  double score_thermal = 0;
  double confidence = 0;  // max(score_rgb, score_thermal)
};

/// Anchors ordered level -> row -> column -> scale -> ratio, centred on cell
/// centres and clipped to the image.
std::vector<Box> generate_anchors(std::span<const std::pair<int, int>> level_shapes,
                                  const AnchorSpec& spec, int image_h, int image_w);

double iou(const Box& a, const Box& b);

using BoxOffsets = std::array<double, 4>;
constexpr BoxOffsets kUnitVariance{1.0, 1.0, 1.0, 1.0};

/// Centre offsets scaled by anchor size, log size ratios, each divided by the
/// matching variance.
BoxOffsets encode_box(const Box& gt, const Box& anchor, const BoxOffsets& variance = kUnitVariance);
/// Inverse of encode_box. When image dimensions are positive the result is
/// clipped to the image.
Box decode_box(const BoxOffsets& offsets, const Box& anchor,
               const BoxOffsets& variance = kUnitVariance, double image_w = 0,
               double image_h = 0);

enum class AnchorLabel : std::uint8_t { kNegative, kPositive, kIgnore };

struct AnchorAssignment {
  std::vector<AnchorLabel> label;
  std::vector<int> gt_index;  // matched gt for positives/ignored, -1 otherwise
};

/// Forced best-anchor match for each non-ignored gt, then IoU >= pos_iou
/// threshold matching. Anchors whose match is an ignore gt are excluded from
/// the loss.
AnchorAssignment match_anchors(std::span<const Box> anchors, std::span<const GroundTruth> gts,
                               double pos_iou = 0.5);

/// Raw head outputs for a batch: per anchor 4 box offsets and 2 logits
/// (person visible in RGB, person visible in thermal).
struct HeadOutput {
  int batch = 0;
  int anchors = 0;
  std::vector<double> loc;     // batch * anchors * 4
  std::vector<double> logits;  // batch * anchors * 2

  std::span<const double> loc_of(int n) const {
    return {loc.data() + static_cast<std::size_t>(n) * anchors * 4,
            static_cast<std::size_t>(anchors) * 4};
  }
  std::span<const double> logits_of(int n) const {
    return {logits.data() + static_cast<std::size_t>(n) * anchors * 2,
            static_cast<std::size_t>(anchors) * 2};
  }
};

/// One 3x3 convolution per pyramid level emitting A * (4 + 2) channels.
class DetectionHead {
 public:
  struct Cache {
    std::vector<nn::Conv2d::Cache> convs;
    std::vector<std::pair<int, int>> shapes;
  };

  DetectionHead() = default;
  DetectionHead(std::span<const int> in_channels, const AnchorSpec& spec, Rng& rng,
                double init_std = 0.01);

  HeadOutput predict(const PyramidFeatures& features, Cache* cache = nullptr) const;
  /// grad_loc / grad_logits have the layout of HeadOutput::loc / logits.
  std::vector<Tensor> backward(std::span<const double> grad_loc,
                               std::span<const double> grad_logits, const Cache& cache);

  nn::Conv2d& conv(int level) { return convs_[static_cast<std::size_t>(level)]; }
  void collect(std::vector<nn::Parameter*>& out);

 private:
  std::vector<int> per_cell_;
  std::vector<nn::Conv2d> convs_;
};

struct DecodeConfig {
  double score_threshold = 0.01;
  double nms_iou = 0.45;
  int top_k = 200;
};

/// Sigmoid scores, confidence = max of the two, threshold, decode.
std::vector<Detection> decode_detections(std::span<const double> loc,
                                         std::span<const double> logits,
                                         std::span<const Box> anchors, const BoxOffsets& variance,
                                         int image_h, int image_w, double score_threshold);

/// Greedy NMS by descending confidence (ties keep input order). A detection
/// is dropped when its IoU with any kept one is >= iou_thresh.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh = 0.45,
                           int top_k = 200);

double sigmoid(double x);

/// JSON-lines records {image_id, x, y, w, h, score}.
struct DetectionRecord {
  std::string image_id;
  Detection det;
};
void write_detections_jsonl(std::ostream& os, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_detections_jsonl(const std::string& path);

}  // namespace rgbt
