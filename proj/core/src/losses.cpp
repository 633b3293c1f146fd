// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rgbt/error.hpp"

namespace rgbt {
namespace {

bool inside_blackout(const ModalityMask* mask, const Box& anchor) {
  if (mask == nullptr) return false;
  const int x = std::clamp(static_cast<int>(std::floor(anchor.center_x())), 0, mask->width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor(anchor.center_y())), 0, mask->height() - 1);
  return mask->at(y, x) == 0;
}

}  // namespace

double bce_with_logits(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

AnchorTargets build_targets(std::span<const Box> anchors, std::span<const GroundTruth> gts,
                            const ModalityMask* mask_rgb, const ModalityMask* mask_thermal,
                            const BoxOffsets& variance, double pos_iou, BlackoutLabel blackout) {
  const std::size_t na = anchors.size();
  AnchorTargets t;
  t.offsets.assign(na * 4, 0.0);
  t.labels.assign(na * 2, Target::kAbsent);
  t.positive.assign(na, 0);
  t.negative_pool.assign(na, 0);

  const auto match = match_anchors(anchors, gts, pos_iou);
  for (std::size_t a = 0; a < na; ++a) {
    Target rgb = Target::kAbsent, thermal = Target::kAbsent;
    switch (match.label[a]) {
      case AnchorLabel::kPositive: {
        const auto& gt = gts[static_cast<std::size_t>(match.gt_index[a])];
        rgb = gt.visible_rgb ? Target::kPresent : Target::kAbsent;
        thermal = gt.visible_thermal ? Target::kPresent : Target::kAbsent;
        const auto off = encode_box(gt.box, anchors[a], variance);
        std::copy(off.begin(), off.end(), t.offsets.begin() + static_cast<std::ptrdiff_t>(a * 4));
        t.positive[a] = 1;
        ++t.num_positive;
        break;
      }
      case AnchorLabel::kIgnore:
        rgb = thermal = Target::kIgnore;
        break;
      case AnchorLabel::kNegative:
        t.negative_pool[a] = 1;
        break;
    }
    const Target masked = blackout == BlackoutLabel::kIgnore ? Target::kIgnore : Target::kAbsent;
    if (rgb != Target::kIgnore && inside_blackout(mask_rgb, anchors[a])) rgb = masked;
    if (thermal != Target::kIgnore && inside_blackout(mask_thermal, anchors[a])) thermal = masked;
    t.labels[a * 2] = rgb;
    t.labels[a * 2 + 1] = thermal;
    if (rgb == Target::kIgnore && thermal == Target::kIgnore) t.negative_pool[a] = 0;
  }
  return t;
}

double bbox_loss(std::span<const double> pred, std::span<const double> target,
                 std::span<const std::uint8_t> positive, std::span<double> grad,
                 double normalizer) {
  RGBT_REQUIRE(pred.size() == target.size() && pred.size() == positive.size() * 4,
               "bbox_loss: misaligned inputs");
  const auto count = std::count(positive.begin(), positive.end(), std::uint8_t{1});
  if (count == 0) return 0.0;
  const double norm = normalizer > 0 ? normalizer : static_cast<double>(count);
  double loss = 0.0;
  for (std::size_t a = 0; a < positive.size(); ++a) {
    if (!positive[a]) continue;
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = pred[a * 4 + k] - target[a * 4 + k];
      const double ad = std::abs(d);
      loss += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
      if (!grad.empty()) grad[a * 4 + k] += (ad < 1.0 ? d : (d > 0 ? 1.0 : -1.0)) / norm;
    }
  }
  return loss / norm;
}

double multilabel_loss(std::span<const double> logits, std::span<const Target> targets,
                       std::span<const std::uint8_t> positive,
                       std::span<const std::uint8_t> negative_pool, std::span<double> grad,
                       double normalizer, int neg_ratio) {
  const std::size_t na = positive.size();
  RGBT_REQUIRE(logits.size() == na * 2 && targets.size() == na * 2 && negative_pool.size() == na,
               "multilabel_loss: misaligned inputs");
  const auto num_pos = std::count(positive.begin(), positive.end(), std::uint8_t{1});
  if (num_pos == 0) return 0.0;
  const double norm = normalizer > 0 ? normalizer : static_cast<double>(num_pos);

  auto anchor_loss = [&](std::size_t a) {
    double l = 0.0;
    for (std::size_t m = 0; m < 2; ++m) {
      const Target t = targets[a * 2 + m];
      if (t == Target::kIgnore) continue;
      l += bce_with_logits(logits[a * 2 + m], t == Target::kPresent ? 1.0 : 0.0);
    }
    return l;
  };
  auto add_grad = [&](std::size_t a) {
    if (grad.empty()) return;
    for (std::size_t m = 0; m < 2; ++m) {
      const Target t = targets[a * 2 + m];
      if (t == Target::kIgnore) continue;
      grad[a * 2 + m] += (sigmoid(logits[a * 2 + m]) - (t == Target::kPresent ? 1.0 : 0.0)) / norm;
    }
  };

  double loss = 0.0;
  std::vector<std::pair<double, std::size_t>> negatives;
  for (std::size_t a = 0; a < na; ++a) {
    if (positive[a]) {
      loss += anchor_loss(a);
      add_grad(a);
    } else if (negative_pool[a]) {
      negatives.emplace_back(anchor_loss(a), a);
    }
  }
  const std::size_t keep =
      std::min(negatives.size(), static_cast<std::size_t>(num_pos) * static_cast<std::size_t>(neg_ratio));
  // Hardest first; equal losses resolve by anchor index.
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(keep),
                    negatives.end(), [](const auto& x, const auto& y) {
                      return x.first != y.first ? x.first > y.first : x.second < y.second;
                    });
  for (std::size_t i = 0; i < keep; ++i) {
    loss += negatives[i].first;
    add_grad(negatives[i].second);
  }
  return loss / norm;
}

LossBreakdown total_loss(double l_bbox, double l_multilabel, double lambda) {
  RGBT_REQUIRE(lambda > 0, "loss balance lambda must be positive");
  return {l_bbox, l_multilabel, lambda, l_bbox + lambda * l_multilabel};
}

}  // namespace rgbt
