// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Brute-force references for detection matching and the miss-rate metric.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "rgbt/evaluation.hpp"
#include "rgbt/rng.hpp"

namespace rgbt::testing {

inline Detection det(Box b, double score) { return {b, score, score, score}; }
inline GroundTruth gt(Box b, bool ignore = false) { return {b, true, true, ignore}; }

inline std::vector<Detection> sorted(std::vector<Detection> d) {
  std::stable_sort(d.begin(), d.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return d;
}

// Exhaustive matching: enumerate every injective det->gt assignment with
// IoU >= thresh and keep the one whose per-detection IoU vector (in score
// order, 0 for unassigned) is lexicographically largest. This is the
// greedy-by-score rule stated as an optimization problem.
inline std::vector<int> exhaustive_assignment(const std::vector<Detection>& dets,
                                       const std::vector<GroundTruth>& gts, double thresh) {
  std::vector<int> best(dets.size(), -1), cur(dets.size(), -1);
  std::vector<double> best_key(dets.size(), -1.0), key(dets.size(), 0.0);
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == dets.size()) {
      if (key > best_key) {
        best_key = key;
        best = cur;
      }
      return;
    }
    cur[i] = -1;
    key[i] = 0.0;
    rec(i + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].is_ignore) continue;
      const double v = iou(dets[i].box, gts[g].box);
      if (v < thresh) continue;
      used[g] = true;
      cur[i] = static_cast<int>(g);
      key[i] = v;
      rec(i + 1);
      used[g] = false;
    }
    cur[i] = -1;
    key[i] = 0.0;
  };
  rec(0);
  return best;
}

struct Counts {
  int tp = 0, fp = 0;
};

inline Counts count_at(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                double threshold) {
  std::vector<Detection> kept;
  for (const auto& d : dets)
    if (d.confidence >= threshold) kept.push_back(d);
  kept = sorted(kept);
  const auto assign = exhaustive_assignment(kept, gts, 0.5);
  Counts c;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (assign[i] >= 0) {
      ++c.tp;
    } else {
      const bool on_ignore = std::any_of(gts.begin(), gts.end(), [&](const GroundTruth& g) {
        return g.is_ignore && iou(kept[i].box, g.box) >= 0.5;
      });
      if (!on_ignore) ++c.fp;
    }
  }
  return c;
}

struct Fixture {
  std::vector<std::vector<Detection>> dets;
  std::vector<std::vector<GroundTruth>> gts;
};

// Operating points for every distinct score threshold, re-matched from scratch.
inline MRCurve enumerated_curve(const Fixture& f) {
  std::vector<double> scores;
  int num_gt = 0;
  for (const auto& g : f.gts)
    num_gt += static_cast<int>(std::count_if(g.begin(), g.end(), [](auto& x) { return !x.is_ignore; }));
  for (const auto& d : f.dets)
    for (const auto& x : d) scores.push_back(x.confidence);
  std::sort(scores.begin(), scores.end(), std::greater<>());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  MRCurve c;
  c.num_gt = num_gt;
  c.num_images = static_cast<int>(f.dets.size());
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.fppi.push_back(0.0);
  c.miss_rate.push_back(1.0);
  for (double t : scores) {
    Counts total;
    for (std::size_t i = 0; i < f.dets.size(); ++i) {
      const Counts k = count_at(f.dets[i], f.gts[i], t);
      total.tp += k.tp;
      total.fp += k.fp;
    }
    const double fppi = static_cast<double>(total.fp) / c.num_images;
    const double mr = 1.0 - static_cast<double>(total.tp) / num_gt;
    // A threshold that only admits ignored detections adds no new point.
    if ( c.fppi.back() == fppi && c.miss_rate.back() == mr) continue;
    c.thresholds.push_back(t);
    c.fppi.push_back(fppi);
    c.miss_rate.push_back(mr);
  }
  return c;
}

// Nine-point evaluation written directly from the metric's definition.
inline double lamr_oracle(const MRCurve& c) {
  double product_log = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double ref = std::pow(10.0, -2.0 + 0.25 * i);
    // Last operating point with fppi <= ref; the curve is ordered by
    // non-decreasing fppi, so this is the largest such fppi.
    double mr = -1.0;
    for (std::size_t k = 0; k < c.fppi.size(); ++k)
      if (c.fppi[k] <= ref) mr = c.miss_rate[k];
    if (mr < 0) mr = *std::max_element(c.miss_rate.begin(), c.miss_rate.end());
    product_log += std::log(std::max(mr, 1.0 / (10.0 * c.num_gt)));
  }
  return 100.0 * std::exp(product_log / 9.0);
}

inline double pipeline_mr(const Fixture& f) {
  std::vector<ImageMatch> matches;
  for (std::size_t i = 0; i < f.dets.size(); ++i)
    matches.push_back(match_image(sorted(f.dets[i]), f.gts[i]));
  return log_average_miss_rate(miss_rate_curve(matches, static_cast<int>(f.dets.size())));
}

inline Fixture random_fixture(Rng& rng, int max_images, int max_dets, int max_gts) {
  Fixture f;
  const int n = uniform_int(rng, 1, max_images);
  bool any_gt = false;
  for (int i = 0; i < n; ++i) {
    std::vector<GroundTruth> g;
    const int ng = uniform_int(rng, 0, max_gts);
    for (int k = 0; k < ng; ++k) {
      const double x = uniform(rng, 0, 60), y = uniform(rng, 0, 40);
      g.push_back(gt({x, y, x + uniform(rng, 6, 14), y + uniform(rng, 12, 30)}, bernoulli(rng, 0.15)));
      any_gt |= !g.back().is_ignore;
    }
    std::vector<Detection> d;
    const int nd = uniform_int(rng, 0, max_dets);
    for (int k = 0; k < nd; ++k) {
      Box b;
      if (!g.empty() && bernoulli(rng, 0.7)) {
        // Jittered copy of a gt, so IoUs straddle the threshold.
        const Box& s = g[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(g.size()) - 1))].box;
        const double j = uniform(rng, 0, 4);
        b = {s.x_min + uniform(rng, -j, j), s.y_min + uniform(rng, -j, j), s.x_max + uniform(rng, -j, j),
             s.y_max + uniform(rng, -j, j)};
      } else {
        const double x = uniform(rng, 0, 60), y = uniform(rng, 0, 40);
        b = {x, y, x + 10, y + 20};
      }
      d.push_back(det(b, std::round(uniform(rng, 0, 1) * 10) / 10));  // ties
    }
    f.dets.push_back(d);
    f.gts.push_back(g);
  }
  if (!any_gt) f.gts[0].push_back(gt({1, 1, 9, 21}));
  return f;
}

}  // namespace rgbt::testing
