// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "rgbt/error.hpp"
#include "rgbt/image.hpp"

namespace rgbt {
namespace {

namespace fs = std::filesystem;

SynthConfig small_config() {
  SynthConfig c;
  c.train_size = 6;
  c.test_size = 3;
  c.seed = 11;
  return c;
}

bool same_scene(const ScenePair& a, const ScenePair& b) {
  return a.rgb == b.rgb && a.thermal == b.thermal && a.gts == b.gts && a.meta.image_id == b.meta.image_id &&
         a.meta.time == b.meta.time;
}

TEST(Synth, SceneShapesAndChannels) {
  const SynthConfig c = small_config();
  const ScenePair s = generate_split_scene(c, Split::kTrain, 0);
  EXPECT_EQ(s.rgb.channels, 3);
  EXPECT_EQ(s.thermal.channels, 1);
  EXPECT_EQ(s.height(), c.height);
  EXPECT_EQ(s.width(), c.width);
  EXPECT_EQ(s.thermal.height, c.height);
  EXPECT_NO_THROW(s.validate());
}

TEST(Synth, SplitSceneIsDeterministicAndIndependentOfOrder) {
  const SynthConfig c = small_config();
  const auto all = generate_split(c, Split::kTrain);
  ASSERT_EQ(all.size(), 6u);
  EXPECT_TRUE(same_scene(all[4], generate_split_scene(c, Split::kTrain, 4)));
  EXPECT_TRUE(same_scene(all[0], generate_split(c, Split::kTrain)[0]));
  EXPECT_EQ(all[2].meta.image_id, "train_00002");
}

TEST(Synth, SplitsAndSeedsDiffer) {
  SynthConfig c = small_config();
  const ScenePair a = generate_split_scene(c, Split::kTrain, 0);
  EXPECT_FALSE(a.rgb == generate_split_scene(c, Split::kTest, 0).rgb);
  c.seed = 12;
  EXPECT_FALSE(a.rgb == generate_split_scene(c, Split::kTrain, 0).rgb);
}

TEST(Synth, GroundTruthStaysInsideImageWithConfiguredHeights) {
  SynthConfig c = small_config();
  c.train_size = 60;
  int total = 0;
  for (const auto& s : generate_split(c, Split::kTrain)) {
    EXPECT_LE(static_cast<int>(s.gts.size()), c.max_pedestrians);
    for (const auto& g : s.gts) {
      ++total;
      EXPECT_TRUE(g.box.valid());
      EXPECT_GE(g.box.x_min, 0);
      EXPECT_GE(g.box.y_min, 0);
      EXPECT_LE(g.box.x_max, c.width);
      EXPECT_LE(g.box.y_max, c.height);
      EXPECT_TRUE(g.visible_rgb || g.visible_thermal);
    }
  }
  EXPECT_GT(total, 30);
}

TEST(Synth, NightAndSingleModalityPedestriansOccur) {
  SynthConfig c = small_config();
  c.train_size = 200;
  int night = 0, thermal_only = 0, rgb_only = 0;
  for (const auto& s : generate_split(c, Split::kTrain)) {
    night += s.meta.time == TimeOfDay::kNight;
    for (const auto& g : s.gts) {
      thermal_only += g.visible_thermal && !g.visible_rgb;
      rgb_only += g.visible_rgb && !g.visible_thermal;
    }
  }
  EXPECT_GT(night, 30);
  EXPECT_LT(night, 90);
  EXPECT_GT(thermal_only, 0);
  EXPECT_GT(rgb_only, 0);
}

TEST(Synth, PedestriansAreWarmInThermal) {
  // A visible pedestrian's box centre should be warmer than the image mean.
  SynthConfig c = small_config();
  c.train_size = 40;
  int warmer = 0, checked = 0;
  for (const auto& s : generate_split(c, Split::kTrain)) {
    double mean = 0;
    for (auto p : s.thermal.pixels) mean += p;
    mean /= static_cast<double>(s.thermal.pixels.size());
    for (const auto& g : s.gts) {
      if (!g.visible_thermal) continue;
      ++checked;
      warmer += s.thermal.at(static_cast<int>(g.box.center_y()), static_cast<int>(g.box.center_x()), 0) > mean;
    }
  }
  ASSERT_GT(checked, 10);
  EXPECT_GE(warmer, checked * 9 / 10);
}

TEST(Synth, InvalidConfigsRejected) {
  SynthConfig c;
  c.height = 4;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.max_pedestrian_height = c.height + 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.thermal_only_fraction = 0.7;
  c.rgb_only_fraction = 0.4;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.night_fraction = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Synth, ConfigJsonRoundTrip) {
  SynthConfig c = small_config();
  c.rgb_noise = 3.5;
  c.night_fraction = 0.25;
  const nlohmann::json j = c;
  const SynthConfig back = j.get<SynthConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Annotations, JsonRoundTrip) {
  const std::vector<GroundTruth> gts{{{1.5, 2, 10, 30}, true, false, false}, {{4, 5, 6, 9}, false, true, true}};
  SceneMeta meta{"img_7", TimeOfDay::kNight};
  SceneMeta back_meta;
  EXPECT_EQ(annotations_from_json(annotations_to_json(gts, meta), &back_meta), gts);
  EXPECT_EQ(back_meta.image_id, "img_7");
  EXPECT_EQ(back_meta.time, TimeOfDay::kNight);
}

TEST(Annotations, MalformedBoxRejected) {
  const nlohmann::json j = {{"objects", {{{"box", {1, 2, 3}}}}}};
  EXPECT_THROW(annotations_from_json(j), ValidationError);
}

TEST(TimeOfDay, StringRoundTrip) {
  for (TimeOfDay t : {TimeOfDay::kDay, TimeOfDay::kNight}) EXPECT_EQ(time_of_day_from_string(to_string(t)), t);
  EXPECT_ANY_THROW(time_of_day_from_string("dusk"));
}

TEST(Dataset, WriteAndLoadRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "rgbt_data_test_dataset";
  fs::remove_all(dir);
  const SynthConfig c = small_config();
  const Manifest m = generate_dataset(c, dir);
  EXPECT_EQ(m.train.size(), 6u);
  EXPECT_EQ(m.test.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const auto train = load_split(dir, Split::kTrain);
  const auto test = load_split(dir, Split::kTest);
  ASSERT_EQ(train.size(), 6u);
  ASSERT_EQ(test.size(), 3u);
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(same_scene(train[i], generate_split_scene(c, Split::kTrain, i))) << i;
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(same_scene(test[i], generate_split_scene(c, Split::kTest, i))) << i;
  const Manifest back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(back.config, m.config);
  fs::remove_all(dir);
}

TEST(Dataset, MissingManifestThrows) {
  EXPECT_ANY_THROW(load_split(fs::temp_directory_path() / "rgbt_no_such_dataset", Split::kTrain));
}

TEST(Png, RoundTripGrayAndRgb) {
  const fs::path dir = fs::temp_directory_path() / "rgbt_png_test";
  fs::create_directories(dir);
  Image rgb(5, 7, 3), gray(5, 7, 1);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i * 37);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) gray.pixels[i] = static_cast<std::uint8_t>(i * 11);
  write_png(dir / "rgb.png", rgb);
  write_png(dir / "gray.png", gray);
  EXPECT_EQ(read_png(dir / "rgb.png"), rgb);
  EXPECT_EQ(read_png(dir / "gray.png"), gray);
  ModalityMask m(5, 7);
  m.fill_rect(1, 3, 2, 6, false);
  write_mask_png(dir / "mask.png", m);
  EXPECT_EQ(read_mask_png(dir / "mask.png"), m);
  fs::remove_all(dir);
}

TEST(Png, ImagesToTensorScalesToUnitRange) {
  Image a(2, 2, 1, 255), b(2, 2, 1, 0);
  b.at(1, 0, 0) = 51;
  const Tensor t = images_to_tensor({&a, &b});
  EXPECT_EQ(t.batch(), 2);
  EXPECT_DOUBLE_EQ(t.at(0, 0, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(t.at(1, 0, 1, 0), 0.2);
  EXPECT_DOUBLE_EQ(t.at(1, 0, 0, 0), 0.0);
}

}  // namespace
}  // namespace rgbt
