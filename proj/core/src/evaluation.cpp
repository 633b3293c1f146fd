// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rgbt/error.hpp"

namespace rgbt {

ImageMatch match_image(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                       double iou_thresh) {
  for (std::size_t i = 1; i < dets.size(); ++i)
    RGBT_REQUIRE(dets[i - 1].confidence >= dets[i].confidence,
                 "match_image: detections must be sorted by descending confidence");
  ImageMatch m;
  m.gt_matched.assign(gts.size(), false);
  m.num_gt = static_cast<int>(std::count_if(gts.begin(), gts.end(),
                                            [](const GroundTruth& g) { return !g.is_ignore; }));
  for (const auto& d : dets) {
    int best = -1;
    double best_iou = iou_thresh;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].is_ignore || m.gt_matched[g]) continue;
      const double v = iou(d.box, gts[g].box);
      if (v >= best_iou && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    Outcome o = Outcome::kFalsePositive;
    if (best >= 0) {
      m.gt_matched[static_cast<std::size_t>(best)] = true;
      o = Outcome::kTruePositive;
    } else if (std::any_of(gts.begin(), gts.end(), [&](const GroundTruth& g) {
                 return g.is_ignore && iou(d.box, g.box) >= iou_thresh;
               })) {
      o = Outcome::kIgnored;
    }
    m.scores.push_back(d.confidence);
    m.outcomes.push_back(o);
  }
  return m;
}

MRCurve miss_rate_curve(std::span<const ImageMatch> images, int n_images) {
  RGBT_REQUIRE(n_images >= 1, "miss_rate_curve: need at least one image");
  MRCurve c;
  c.num_images = n_images;
  std::vector<std::pair<double, bool>> scored;  // (score, is_tp)
  for (const auto& im : images) {
    c.num_gt += im.num_gt;
    for (std::size_t i = 0; i < im.scores.size(); ++i) {
      if (im.outcomes[i] == Outcome::kIgnored) continue;
      scored.emplace_back(im.scores[i], im.outcomes[i] == Outcome::kTruePositive);
    }
  }
  RGBT_REQUIRE(c.num_gt > 0, "miss rate undefined: no non-ignored ground truth");
  // Operating point above every score: nothing detected.
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.fppi.push_back(0.0);
  c.miss_rate.push_back(1.0);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].second ? ++tp : ++fp;
    if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
    c.thresholds.push_back(scored[i].first);
    c.fppi.push_back(static_cast<double>(fp) / n_images);
    c.miss_rate.push_back(1.0 - static_cast<double>(tp) / c.num_gt);
  }
  return c;
}

std::vector<double> reference_fppi() {
  std::vector<double> refs;
  for (int i = 0; i < 9; ++i) refs.push_back(std::pow(10.0, -2.0 + 0.25 * i));
  return refs;
}

double log_average_miss_rate(const MRCurve& curve) {
  RGBT_REQUIRE(!curve.fppi.empty() && curve.fppi.size() == curve.miss_rate.size(),
               "log_average_miss_rate: empty or malformed curve");
  const double floor = curve.num_gt > 0 ? 1.0 / (10.0 * curve.num_gt) : 1e-10;
  const double highest = *std::max_element(curve.miss_rate.begin(), curve.miss_rate.end());
  double log_sum = 0.0;
  const auto refs = reference_fppi();
  for (double ref : refs) {
    double mr = highest;
    // fppi is non-decreasing along the curve; the last point at or below ref
    // has the largest fppi (and the lowest miss rate among ties).
    for (std::size_t i = 0; i < curve.fppi.size(); ++i) {
      if (curve.fppi[i] <= ref) mr = curve.miss_rate[i];
    }
    log_sum += std::log(std::max(mr, floor));
  }
  return 100.0 * std::exp(log_sum / static_cast<double>(refs.size()));
}

std::vector<GroundTruth> apply_filter(std::span<const GroundTruth> gts, const EvalFilter& filter) {
  std::vector<GroundTruth> out(gts.begin(), gts.end());
  for (auto& g : out)
    if (g.box.height() < filter.min_height) g.is_ignore = true;
  return out;
}

std::string to_string(EvalSplit s) {
  switch (s) {
    case EvalSplit::kAll: return "all";
    case EvalSplit::kDay: return "day";
    case EvalSplit::kNight: return "night";
  }
  return "unknown";
}

SplitResult evaluate_split(std::span<const EvalImage> images, EvalSplit split,
                           const EvalFilter& filter, double iou_thresh) {
  SplitResult r;
  r.split = split;
  std::vector<ImageMatch> matches;
  for (const auto& im : images) {
    if (split == EvalSplit::kDay && im.time != TimeOfDay::kDay) continue;
    if (split == EvalSplit::kNight && im.time != TimeOfDay::kNight) continue;
    std::vector<Detection> dets = im.dets;
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
      return a.confidence > b.confidence;
    });
    matches.push_back(match_image(dets, apply_filter(im.gts, filter), iou_thresh));
  }
  const int gts = std::accumulate(matches.begin(), matches.end(), 0,
                                  [](int s, const ImageMatch& m) { return s + m.num_gt; });
  if (matches.empty() || gts == 0) return r;
  r.curve = miss_rate_curve(matches, static_cast<int>(matches.size()));
  r.mr = log_average_miss_rate(r.curve);
  r.defined = true;
  return r;
}

nlohmann::json metrics_json(const std::string& scenario, const SplitResult& r) {
  nlohmann::json j{{"scenario", scenario}, {"split", to_string(r.split)}};
  j["mr"] = r.defined ? nlohmann::json(r.mr) : nlohmann::json(nullptr);
  j["curve"] = {{"fppi", r.curve.fppi}, {"miss_rate", r.curve.miss_rate}};
  return j;
}

}  // namespace rgbt
