// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/detection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "rgbt/backbone.hpp"
#include "rgbt/error.hpp"

namespace rgbt {
namespace {

Box random_box(Rng& rng, double w = 100, double h = 80) {
  const double x0 = uniform(rng, 0, w - 6), y0 = uniform(rng, 0, h - 6);
  return {x0, y0, uniform(rng, x0 + 2, w), uniform(rng, y0 + 2, h)};
}

TEST(Anchors, GridCentres) {
  AnchorSpec spec{{{{2.0}, {1.0}}}};
  const std::pair<int, int> shape[] = {{2, 2}};
  const auto a = generate_anchors(shape, spec, 8, 8);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_DOUBLE_EQ(a[0].center_x(), 2.0);
  EXPECT_DOUBLE_EQ(a[0].center_y(), 2.0);
  EXPECT_DOUBLE_EQ(a[1].center_x(), 6.0);
  EXPECT_DOUBLE_EQ(a[3].center_y(), 6.0);
}

TEST(Anchors, ScaleAndRatio) {
  AnchorSpec spec{{{{32.0}, {2.0}}}};
  const std::pair<int, int> shape[] = {{1, 1}};
  const auto a = generate_anchors(shape, spec, 200, 200);
  EXPECT_NEAR(a[0].height() / a[0].width(), 2.0, 1e-12);
  EXPECT_NEAR(a[0].area(), 32.0 * 32.0, 1e-9);
}

TEST(Anchors, DefaultCountAt512x640) {
  const std::vector<int> strides{8, 16, 32};
  const auto spec = AnchorSpec::pedestrian(strides);
  const std::vector<std::pair<int, int>> shapes{{64, 80}, {32, 40}, {16, 20}};
  EXPECT_EQ(generate_anchors(shapes, spec, 512, 640).size(), 20160u);
}

TEST(Anchors, ClippedToImage) {
  AnchorSpec spec{{{{50.0}, {3.0}}}};
  const std::pair<int, int> shape[] = {{2, 2}};
  for (const auto& a : generate_anchors(shape, spec, 20, 20)) {
    EXPECT_GE(a.x_min, 0);
    EXPECT_GE(a.y_min, 0);
    EXPECT_LE(a.x_max, 20);
    EXPECT_LE(a.y_max, 20);
  }
}

TEST(Anchors, ScalesMustIncrease) {
  AnchorSpec spec{{{{30.0}, {1.0}}, {{20.0}, {1.0}}}};
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Iou, Examples) {
  const Box a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 0, 15, 10}), 50.0 / 150.0);
}

TEST(BoxCoding, Examples) {
  const Box anchor{0, 0, 10, 10};
  const auto zero = encode_box(anchor, anchor);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  const auto off = encode_box({5, 5, 15, 15}, anchor);
  EXPECT_DOUBLE_EQ(off[0], 0.5);
  EXPECT_DOUBLE_EQ(off[1], 0.5);
  EXPECT_DOUBLE_EQ(off[2], 0.0);
  EXPECT_DOUBLE_EQ(off[3], 0.0);
  EXPECT_THROW(encode_box({0, 0, 0, 5}, anchor), ValidationError);
}

TEST(BoxCoding, RoundTripProperty) {
  Rng rng(1);
  const BoxOffsets variance{0.1, 0.1, 0.2, 0.2};
  for (int i = 0; i < 1000; ++i) {
    const Box gt = random_box(rng), anchor = random_box(rng);
    for (const auto& var : {kUnitVariance, variance}) {
      const Box back = decode_box(encode_box(gt, anchor, var), anchor, var);
      ASSERT_NEAR(back.x_min, gt.x_min, 1e-6);
      ASSERT_NEAR(back.y_min, gt.y_min, 1e-6);
      ASSERT_NEAR(back.x_max, gt.x_max, 1e-6);
      ASSERT_NEAR(back.y_max, gt.y_max, 1e-6);
    }
  }
}

TEST(BoxCoding, DecodeClipsToImage) {
  const Box b = decode_box({5, 5, 1, 1}, {0, 0, 10, 10}, kUnitVariance, 20, 20);
  EXPECT_LE(b.x_max, 20);
  EXPECT_LE(b.y_max, 20);
}

TEST(Matching, NoGtsAllNegative) {
  const Box anchors[] = {{0, 0, 10, 10}, {5, 5, 20, 20}};
  const auto m = match_anchors(anchors, {});
  for (auto l : m.label) EXPECT_EQ(l, AnchorLabel::kNegative);
}

TEST(Matching, ThresholdAndForcedMatch) {
  const Box anchors[] = {{0, 0, 10, 10}, {50, 50, 60, 60}, {0, 0, 9, 10}};
  const GroundTruth gts[] = {{{0, 0, 10, 10}, true, true, false},
                             {{52, 52, 70, 70}, true, true, false}};
  const auto m = match_anchors(anchors, gts);
  EXPECT_EQ(m.label[0], AnchorLabel::kPositive);
  EXPECT_EQ(m.label[2], AnchorLabel::kPositive);  // IoU 0.9
  // Best anchor for the second gt has IoU ~0.25, still matched.
  EXPECT_LT(iou(anchors[1], gts[1].box), 0.5);
  EXPECT_EQ(m.label[1], AnchorLabel::kPositive);
  EXPECT_EQ(m.gt_index[1], 1);
}

TEST(Matching, IgnoredGtsExcludeAnchors) {
  const Box anchors[] = {{0, 0, 10, 10}, {30, 30, 40, 40}};
  const GroundTruth gts[] = {{{0, 0, 10, 10}, true, true, true}};
  const auto m = match_anchors(anchors, gts);
  EXPECT_EQ(m.label[0], AnchorLabel::kIgnore);
  EXPECT_EQ(m.label[1], AnchorLabel::kNegative);
}

TEST(Matching, EveryRealGtHasAPositive) {
  Rng rng(2);
  AnchorSpec spec{{{{12.0}, {2.0, 3.0}}, {{30.0}, {2.0}}}};
  const std::vector<std::pair<int, int>> shapes{{8, 12}, {4, 6}};
  const auto anchors = generate_anchors(shapes, spec, 64, 96);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruth> gts;
    const int n = uniform_int(rng, 1, 6);
    for (int i = 0; i < n; ++i) gts.push_back({random_box(rng, 96, 64), true, true, bernoulli(rng, 0.2)});
    const auto m = match_anchors(anchors, gts);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].is_ignore) continue;
      bool found = false;
      for (std::size_t a = 0; a < anchors.size(); ++a)
        found |= m.label[a] == AnchorLabel::kPositive && m.gt_index[a] == static_cast<int>(g);
      ASSERT_TRUE(found) << "trial " << trial << " gt " << g;
    }
  }
}

TEST(Head, OutputCountAndZeroWeights) {
  Rng rng(3);
  AnchorSpec spec{{{{12.0}, {2.0, 3.0}}, {{30.0}, {2.0}}}};
  const int channels[] = {4, 6};
  DetectionHead head(channels, spec, rng, 0.1);
  PyramidFeatures f{{testing::random_tensor(2, 4, 8, 12, rng), testing::random_tensor(2, 6, 4, 6, rng)}};
  const HeadOutput out = head.predict(f);
  EXPECT_EQ(out.anchors, 8 * 12 * 2 + 4 * 6);
  EXPECT_EQ(out.logits.size(), static_cast<std::size_t>(2 * out.anchors * 2));
  for (double v : out.logits) EXPECT_TRUE(std::isfinite(v));

  for (int l = 0; l < 2; ++l) head.conv(l).weight().value.fill(0.0);
  const HeadOutput zero = head.predict(f);
  for (double v : zero.logits) EXPECT_DOUBLE_EQ(sigmoid(v), 0.5);

  PyramidFeatures bad{{Tensor(1, 5, 8, 12), Tensor(1, 6, 4, 6)}};
  EXPECT_THROW(head.predict(bad), ValidationError);
}

TEST(Nms, Examples) {
  const Detection a{{0, 0, 10, 10}, 0.9, 0.1, 0.9};
  const Detection b{{0, 0, 10, 10}, 0.8, 0.2, 0.8};
  const auto kept = nms({b, a});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].confidence, 0.9);

  const Detection c{{20, 20, 30, 30}, 0.5, 0.5, 0.5};
  EXPECT_EQ(nms({a, c}).size(), 2u);
}

TEST(Nms, ChainMatchesOracle) {
  // a overlaps b, b overlaps c, a and c disjoint: greedy keeps a and c.
  std::vector<Detection> chain{{{0, 0, 10, 10}, 0, 0, 0.9},
                               {{4, 0, 14, 10}, 0, 0, 0.8},
                               {{9, 0, 19, 10}, 0, 0, 0.7}};
  const auto kept = nms(chain, 0.3);
  const auto ref = testing::nms_oracle(chain, 0.3, 200);
  ASSERT_EQ(kept.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(kept[i].box, ref[i].box);
}

TEST(Nms, RandomPropertiesAndOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> dets;
    const int n = uniform_int(rng, 0, 25);
    for (int i = 0; i < n; ++i) {
      const double s = std::round(uniform(rng, 0, 1) * 20) / 20;  // force ties
      dets.push_back({random_box(rng, 60, 60), s, 0, s});
    }
    const int top_k = uniform_int(rng, 1, 30);
    const auto kept = nms(dets, 0.45, top_k);
    const auto ref = testing::nms_oracle(dets, 0.45, top_k);
    ASSERT_EQ(kept.size(), ref.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ASSERT_EQ(kept[i].box, ref[i].box);
      if (i > 0) ASSERT_GE(kept[i - 1].confidence, kept[i].confidence);
      for (std::size_t j = 0; j < i; ++j) ASSERT_LT(iou(kept[i].box, kept[j].box), 0.45);
    }
  }
}

TEST(Decode, ConfidenceIsMaxOfModalities) {
  const Box anchors[] = {{0, 0, 10, 20}, {20, 0, 30, 20}};
  const double loc[8] = {0};
  const double logits[4] = {2.0, -1.0, -3.0, 0.5};
  const auto dets = decode_detections(loc, logits, anchors, kUnitVariance, 40, 40, 0.01);
  ASSERT_EQ(dets.size(), 2u);
  for (const auto& d : dets) {
    EXPECT_DOUBLE_EQ(d.confidence, std::max(d.score_rgb, d.score_thermal));
    EXPECT_GE(d.confidence, 0.0);
    EXPECT_LE(d.confidence, 1.0);
  }
}

TEST(DetectionsJsonl, RoundTrip) {
  const std::vector<DetectionRecord> recs{{"img_1", {{1.5, 2, 11.5, 22}, 0.3, 0.7, 0.7}},
                                          {"img_2", {{0, 0, 4, 8}, 0.9, 0.1, 0.9}}};
  const auto path = std::filesystem::temp_directory_path() / "rgbt_dets_test.jsonl";
  {
    std::ofstream os(path);
    write_detections_jsonl(os, recs);
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j.at("image_id"), "img_1");
  EXPECT_DOUBLE_EQ(j.at("w").get<double>(), 10.0);
  EXPECT_DOUBLE_EQ(j.at("h").get<double>(), 20.0);
  const auto back = read_detections_jsonl(path.string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].image_id, "img_2");
  EXPECT_EQ(back[0].det.box, recs[0].det.box);
  EXPECT_DOUBLE_EQ(back[0].det.confidence, 0.7);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rgbt
