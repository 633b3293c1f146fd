// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/augmentation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>

#include "rgbt/error.hpp"

namespace rgbt {
namespace {

std::atomic<std::uint64_t> g_invocations{0};

struct Rect {
  int y0, y1, x0, x1;
  bool overlaps(const Rect& o) const {
    return y0 < o.y1 && o.y0 < y1 && x0 < o.x1 && o.x0 < x1;
  }
};

Rect random_patch(Rng& rng, const MaskingPolicy& p, int h, int w) {
  const int ph = std::clamp(static_cast<int>(std::lround(uniform(rng, p.patch_min, p.patch_max) * h)), 1, h);
  const int pw = std::clamp(static_cast<int>(std::lround(uniform(rng, p.patch_min, p.patch_max) * w)), 1, w);
  const int y0 = uniform_int(rng, 0, h - ph);
  const int x0 = uniform_int(rng, 0, w - pw);
  return {y0, y0 + ph, x0, x0 + pw};
}

}  // namespace

void MaskingPolicy::validate() const {
  for (double p : {p_full_rgb, p_full_thermal, p_patch_rgb, p_patch_thermal, flip_prob})
    RGBT_REQUIRE(p >= 0 && p <= 1, "masking probabilities must lie in [0, 1]");
  RGBT_REQUIRE(p_full_rgb + p_full_thermal <= 1,
               "full-modality masking probabilities must sum to at most 1");
  const double open = 1 - p_full_rgb - p_full_thermal;
  RGBT_REQUIRE(p_patch_rgb <= open + 1e-12 && p_patch_thermal <= open + 1e-12,
               "patch probabilities cannot exceed the probability of no full-modality event");
  RGBT_REQUIRE(patch_min > 0 && patch_max <= 1 && patch_min <= patch_max,
               "patch size fractions must satisfy 0 < min <= max <= 1");
  RGBT_REQUIRE(max_placement_tries >= 1, "max_placement_tries must be positive");
  RGBT_REQUIRE(brightness_jitter >= 0 && brightness_jitter < 1, "brightness jitter out of range");
}

void to_json(nlohmann::json& j, const MaskingPolicy& p) {
  j = {{"p_full_rgb", p.p_full_rgb},
       {"p_full_thermal", p.p_full_thermal},
       {"p_patch_rgb", p.p_patch_rgb},
       {"p_patch_thermal", p.p_patch_thermal},
       {"patch_min", p.patch_min},
       {"patch_max", p.patch_max},
       {"max_placement_tries", p.max_placement_tries},
       {"flip_prob", p.flip_prob},
       {"brightness_jitter", p.brightness_jitter}};
}

void from_json(const nlohmann::json& j, MaskingPolicy& p) {
  MaskingPolicy d;
  p.p_full_rgb = j.value("p_full_rgb", d.p_full_rgb);
  p.p_full_thermal = j.value("p_full_thermal", d.p_full_thermal);
  p.p_patch_rgb = j.value("p_patch_rgb", d.p_patch_rgb);
  p.p_patch_thermal = j.value("p_patch_thermal", d.p_patch_thermal);
  p.patch_min = j.value("patch_min", d.patch_min);
  p.patch_max = j.value("patch_max", d.patch_max);
  p.max_placement_tries = j.value("max_placement_tries", d.max_placement_tries);
  p.flip_prob = j.value("flip_prob", d.flip_prob);
  p.brightness_jitter = j.value("brightness_jitter", d.brightness_jitter);
}

TrainingMasks sample_training_masks(Rng& rng, const MaskingPolicy& policy, int height,
                                    int width) {
  ++g_invocations;
  policy.validate();
  TrainingMasks out{ModalityMask::ones(height, width), ModalityMask::ones(height, width), {}};

  const double u = uniform(rng, 0.0, 1.0);
  if (u < policy.p_full_rgb) {
    out.events.full_rgb = true;
    out.rgb = ModalityMask::zeros(height, width);
    return out;
  }
  if (u < policy.p_full_rgb + policy.p_full_thermal) {
    out.events.full_thermal = true;
    out.thermal = ModalityMask::zeros(height, width);
    return out;
  }

  // Conditional on no full event; rescaled so the marginal equals the policy.
  const double open = 1.0 - policy.p_full_rgb - policy.p_full_thermal;
  const bool want_rgb = bernoulli(rng, std::min(1.0, policy.p_patch_rgb / open));
  const bool want_thermal = bernoulli(rng, std::min(1.0, policy.p_patch_thermal / open));
  std::optional<Rect> rgb_patch;
  if (want_rgb) {
    rgb_patch = random_patch(rng, policy, height, width);
    out.rgb.fill_rect(rgb_patch->y0, rgb_patch->y1, rgb_patch->x0, rgb_patch->x1, false);
    out.events.patch_rgb = true;
  }
  if (want_thermal) {
    for (int t = 0; t < policy.max_placement_tries; ++t) {
      const Rect r = random_patch(rng, policy, height, width);
      if (rgb_patch && r.overlaps(*rgb_patch)) continue;
      out.thermal.fill_rect(r.y0, r.y1, r.x0, r.x1, false);
      out.events.patch_thermal = true;
      break;
    }
  }
  return out;
}

ScenePair apply_masks(const ScenePair& pair, const ModalityMask& m_rgb,
                      const ModalityMask& m_thermal) {
  RGBT_REQUIRE(m_rgb.height() == pair.rgb.height && m_rgb.width() == pair.rgb.width &&
                   m_thermal.height() == pair.thermal.height &&
                   m_thermal.width() == pair.thermal.width,
               "apply_masks: mask dimensions must equal image dimensions");
  ScenePair out = pair;
  for (int y = 0; y < pair.rgb.height; ++y) {
    for (int x = 0; x < pair.rgb.width; ++x) {
      if (!m_rgb.at(y, x))
        for (int c = 0; c < out.rgb.channels; ++c) out.rgb.at(y, x, c) = 0;
      if (!m_thermal.at(y, x))
        for (int c = 0; c < out.thermal.channels; ++c) out.thermal.at(y, x, c) = 0;
    }
  }
  return out;
}

void apply_baseline_augmentation(ScenePair& pair, Rng& rng, const MaskingPolicy& policy) {
  ++g_invocations;
  if (bernoulli(rng, policy.flip_prob)) {
    for (Image* img : {&pair.rgb, &pair.thermal}) {
      for (int y = 0; y < img->height; ++y)
        for (int x = 0; x < img->width / 2; ++x)
          for (int c = 0; c < img->channels; ++c)
            std::swap(img->at(y, x, c), img->at(y, img->width - 1 - x, c));
    }
    const double w = pair.rgb.width;
    for (auto& g : pair.gts) g.box = {w - g.box.x_max, g.box.y_min, w - g.box.x_min, g.box.y_max};
  }
  if (policy.brightness_jitter > 0) {
    const double gain = uniform(rng, 1 - policy.brightness_jitter, 1 + policy.brightness_jitter);
    for (Image* img : {&pair.rgb, &pair.thermal}) {
      for (auto& p : img->pixels)
        p = static_cast<std::uint8_t>(std::clamp(std::lround(p * gain), 0L, 255L));
    }
  }
}

std::uint64_t augmentation_invocations() { return g_invocations.load(); }

}  // namespace rgbt
