// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/augmentation.hpp"

#include <gtest/gtest.h>

#include "rgbt/data.hpp"
#include "rgbt/error.hpp"

namespace rgbt {
namespace {

bool all_equal(const ModalityMask& m, std::uint8_t v) {
  return std::all_of(m.values().begin(), m.values().end(), [v](std::uint8_t x) { return x == v; });
}

ScenePair small_scene(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.height = 24;
  cfg.width = 32;
  cfg.min_pedestrian_height = 8;
  cfg.max_pedestrian_height = 16;
  Rng rng(seed);
  return generate_scene(rng, cfg, "s");
}

TEST(Masking, ZeroPolicyIsNoOp) {
  MaskingPolicy p;
  p.p_full_rgb = p.p_full_thermal = p.p_patch_rgb = p.p_patch_thermal = 0;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto m = sample_training_masks(rng, p, 16, 20);
    EXPECT_TRUE(all_equal(m.rgb, 1));
    EXPECT_TRUE(all_equal(m.thermal, 1));
  }
}

TEST(Masking, ForcedFullRgb) {
  MaskingPolicy p;
  p.p_full_rgb = 1;
  p.p_full_thermal = p.p_patch_rgb = p.p_patch_thermal = 0;
  Rng rng(2);
  const auto m = sample_training_masks(rng, p, 16, 20);
  EXPECT_TRUE(all_equal(m.rgb, 0));
  EXPECT_TRUE(all_equal(m.thermal, 1));
  EXPECT_TRUE(m.events.full_rgb);
}

TEST(Masking, RejectsInvalidPolicies) {
  Rng rng(3);
  MaskingPolicy p;
  p.p_full_rgb = 0.7;
  p.p_full_thermal = 0.6;
  EXPECT_THROW(sample_training_masks(rng, p, 8, 8), ValidationError);
  p = {};
  p.patch_min = 0.6;
  p.patch_max = 0.5;
  EXPECT_THROW(sample_training_masks(rng, p, 8, 8), ValidationError);
}

TEST(Masking, EventFrequenciesAndNoCoMask) {
  const MaskingPolicy p;
  Rng rng(4);
  const int draws = 10000;
  int full_rgb = 0, full_thermal = 0, patch_rgb = 0, patch_thermal = 0, violations = 0;
  for (int i = 0; i < draws; ++i) {
    const auto m = sample_training_masks(rng, p, 32, 40);
    full_rgb += m.events.full_rgb;
    full_thermal += m.events.full_thermal;
    patch_rgb += m.events.patch_rgb;
    patch_thermal += m.events.patch_thermal;
    for (std::size_t k = 0; k < m.rgb.values().size(); ++k)
      violations += m.rgb.values()[k] == 0 && m.thermal.values()[k] == 0;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_NEAR(full_rgb / double(draws), 0.10, 0.01);
  EXPECT_NEAR(full_thermal / double(draws), 0.10, 0.01);
  EXPECT_NEAR(patch_rgb / double(draws), 0.10, 0.01);
  // Thermal patches are occasionally skipped when no free spot is found.
  EXPECT_NEAR(patch_thermal / double(draws), 0.10, 0.01);
}

TEST(Masking, PatchGeometry) {
  MaskingPolicy p;
  p.p_full_rgb = p.p_full_thermal = p.p_patch_thermal = 0;
  p.p_patch_rgb = 1;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto m = sample_training_masks(rng, p, 40, 50);
    int y0 = 40, y1 = -1, x0 = 50, x1 = -1, zeros = 0;
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 50; ++x)
        if (!m.rgb.at(y, x)) {
          ++zeros;
          y0 = std::min(y0, y), y1 = std::max(y1, y), x0 = std::min(x0, x), x1 = std::max(x1, x);
        }
    const int ph = y1 - y0 + 1, pw = x1 - x0 + 1;
    ASSERT_EQ(zeros, ph * pw) << "patch must be a filled rectangle";
    ASSERT_GE(ph, 8);
    ASSERT_LE(ph, 20);
    ASSERT_GE(pw, 10);
    ASSERT_LE(pw, 25);
  }
}

TEST(Masking, DeterministicUnderSeed) {
  const MaskingPolicy p;
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) {
    const auto ma = sample_training_masks(a, p, 16, 24);
    const auto mb = sample_training_masks(b, p, 16, 24);
    ASSERT_TRUE(std::ranges::equal(ma.rgb.values(), mb.rgb.values()));
    ASSERT_TRUE(std::ranges::equal(ma.thermal.values(), mb.thermal.values()));
  }
}

TEST(ApplyMasks, Examples) {
  const ScenePair s = small_scene(6);
  const auto ones = ModalityMask::ones(s.height(), s.width());
  const ScenePair same = apply_masks(s, ones, ones);
  EXPECT_EQ(same.rgb.pixels, s.rgb.pixels);
  EXPECT_EQ(same.thermal.pixels, s.thermal.pixels);

  const ScenePair dark = apply_masks(s, ModalityMask::zeros(s.height(), s.width()), ones);
  EXPECT_TRUE(std::ranges::all_of(dark.rgb.pixels, [](auto v) { return v == 0; }));
  EXPECT_EQ(dark.thermal.pixels, s.thermal.pixels);

  ScenePair bright = s;
  for (auto& v : bright.thermal.pixels) v = 200;
  ModalityMask one_hole = ones;
  one_hole.fill_rect(3, 4, 5, 6, false);
  const ScenePair holed = apply_masks(bright, ones, one_hole);
  int changed = 0;
  for (std::size_t i = 0; i < holed.thermal.pixels.size(); ++i)
    changed += holed.thermal.pixels[i] != bright.thermal.pixels[i];
  EXPECT_EQ(changed, 1);
  EXPECT_EQ(holed.thermal.at(3, 5, 0), 0);

  EXPECT_THROW(apply_masks(s, ModalityMask::ones(5, 5), ones), ValidationError);
}

TEST(BaselineAugmentation, FlipMirrorsBoxes) {
  MaskingPolicy p;
  p.flip_prob = 1;
  p.brightness_jitter = 0;
  ScenePair s = small_scene(7);
  s.gts = {{{2, 3, 10, 15}, true, true, false}};
  const ScenePair orig = s;
  Rng rng(8);
  apply_baseline_augmentation(s, rng, p);
  EXPECT_EQ(s.gts[0].box, (Box{22, 3, 30, 15}));
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      ASSERT_EQ(s.thermal.at(y, x, 0), orig.thermal.at(y, s.width() - 1 - x, 0));
      ASSERT_EQ(s.rgb.at(y, x, 2), orig.rgb.at(y, s.width() - 1 - x, 2));
    }
}

TEST(BaselineAugmentation, CountsInvocations) {
  const auto before = augmentation_invocations();
  ScenePair s = small_scene(9);
  Rng rng(10);
  apply_baseline_augmentation(s, rng, MaskingPolicy{});
  sample_training_masks(rng, MaskingPolicy{}, 8, 8);
  EXPECT_EQ(augmentation_invocations(), before + 2);
}

}  // namespace
}  // namespace rgbt
