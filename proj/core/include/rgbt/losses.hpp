// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rgbt/detection.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

/// Per-anchor, per-modality classification target.
enum class Target : std::int8_t { kIgnore = -1, kAbsent = 0, kPresent = 1 };

struct LossBreakdown {
  double l_bbox = 0;
  double l_multilabel = 0;
  double lambda = 1;
  double total = 0;
};

/// How a modality's label is set for anchors centred in that modality's
/// blackout region.
enum class BlackoutLabel { kIgnore, kAbsent };

/// Regression and classification targets for one image.
struct AnchorTargets {
  std::vector<double> offsets;       // anchors * 4, zero for non-positives
  std::vector<Target> labels;        // anchors * 2 (rgb, thermal)
  std::vector<std::uint8_t> positive;       // anchors
  std::vector<std::uint8_t> negative_pool;  // anchors eligible for hard-negative mining
  int num_positive = 0;
};

/// Builds targets from anchor matching. Positives take their gt's visibility
/// flags; masks (image resolution, may be empty) mark blackout regions.
AnchorTargets build_targets(std::span<const Box> anchors, std::span<const GroundTruth> gts,
                            const ModalityMask* mask_rgb, const ModalityMask* mask_thermal,
                            const BoxOffsets& variance, double pos_iou = 0.5,
                            BlackoutLabel blackout = BlackoutLabel::kIgnore);

/// Smooth-L1 over positive anchors divided by `normalizer` (0 means "number
/// of positives"). Returns 0 when there are no positives. If `grad` is
/// non-empty it receives dL/dpred (accumulated).
double bbox_loss(std::span<const double> pred, std::span<const double> target,
                 std::span<const std::uint8_t> positive, std::span<double> grad = {},
                 double normalizer = 0);

/// Per-modality binary cross-entropy. Positive anchors contribute every
/// non-ignored modality; negatives from `negative_pool` are mined by
/// descending loss at `neg_ratio` per positive. Normalized like bbox_loss.
double multilabel_loss(std::span<const double> logits, std::span<const Target> targets,
                       std::span<const std::uint8_t> positive,
                       std::span<const std::uint8_t> negative_pool, std::span<double> grad = {},
                       double normalizer = 0, int neg_ratio = 3);

/// total = l_bbox + lambda * l_multilabel; lambda must be positive.
LossBreakdown total_loss(double l_bbox, double l_multilabel, double lambda = 1.0);

/// Numerically stable BCE with logits.
double bce_with_logits(double logit, double target);

}  // namespace rgbt
