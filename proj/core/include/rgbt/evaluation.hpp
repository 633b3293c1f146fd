// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "rgbt/data.hpp"
#include "rgbt/detection.hpp"

namespace rgbt {

enum class Outcome { kTruePositive, kFalsePositive, kIgnored };

struct ImageMatch {
  std::vector<double> scores;     // per detection, input order
  std::vector<Outcome> outcomes;  // per detection
  std::vector<bool> gt_matched;   // per ground truth
  int num_gt = 0;                 // non-ignored ground truths
};

/// Greedy matching in detection order (which must be by descending
/// confidence; equal confidences keep their input order). Each detection
/// takes the unmatched non-ignored gt of highest IoU >= iou_thresh; failing
/// that, a detection overlapping an ignore gt is neither TP nor FP.
ImageMatch match_image(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                       double iou_thresh = 0.5);

/// Miss rate against false positives per image. The first point is the
/// threshold above every score (fppi 0, miss rate 1); then one point per
/// distinct detection score, descending.
struct MRCurve {
  std::vector<double> thresholds;
  std::vector<double> fppi;
  std::vector<double> miss_rate;
  int num_gt = 0;
  int num_images = 0;
};

MRCurve miss_rate_curve(std::span<const ImageMatch> images, int n_images);

/// FPPI reference points: 9 values log-spaced on [1e-2, 1e0].
std::vector<double> reference_fppi();

/// Geometric mean of the miss rate at the reference FPPI points, in percent.
/// At each point the miss rate of the largest curve FPPI <= point is used
/// (the curve's highest miss rate if none); zero miss rates are clamped to
/// 1 / (10 * num_gt).
double log_average_miss_rate(const MRCurve& curve);

/// Ground truths shorter than `min_height` pixels become ignore regions.
struct EvalFilter {
  double min_height = 55.0;
};
std::vector<GroundTruth> apply_filter(std::span<const GroundTruth> gts, const EvalFilter& filter);

enum class EvalSplit { kAll, kDay, kNight };
constexpr std::array<EvalSplit, 3> kAllSplits{EvalSplit::kAll, EvalSplit::kDay, EvalSplit::kNight};
std::string to_string(EvalSplit s);

struct EvalImage {
  std::string image_id;
  TimeOfDay time = TimeOfDay::kDay;
  std::vector<Detection> dets;  // any order
  std::vector<GroundTruth> gts;
};

struct SplitResult {
  EvalSplit split = EvalSplit::kAll;
  bool defined = false;  // false when the split has no images or no gts
  double mr = 0;         // percent
  MRCurve curve;
};

SplitResult evaluate_split(std::span<const EvalImage> images, EvalSplit split,
                           const EvalFilter& filter, double iou_thresh = 0.5);

/// {scenario, split, mr, curve: {fppi, miss_rate}}; mr is null when undefined.
nlohmann::json metrics_json(const std::string& scenario, const SplitResult& r);

}  // namespace rgbt
