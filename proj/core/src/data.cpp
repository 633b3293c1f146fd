// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rgbt/error.hpp"

namespace rgbt {
namespace fs = std::filesystem;

const char* to_string(TimeOfDay t) { return t == TimeOfDay::kDay ? "day" : "night"; }

TimeOfDay time_of_day_from_string(const std::string& s) {
  if (s == "day") return TimeOfDay::kDay;
  if (s == "night") return TimeOfDay::kNight;
  throw ValidationError("unknown time-of-day tag '" + s + "'");
}

const char* to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

void ScenePair::validate() const {
  RGBT_REQUIRE(rgb.channels == 3 && thermal.channels == 1,
               "scene needs a 3-channel RGB and a 1-channel thermal image");
  RGBT_REQUIRE(rgb.height == thermal.height && rgb.width == thermal.width,
               "RGB and thermal images must be co-registered (same size)");
  for (const auto& gt : gts) {
    RGBT_REQUIRE(gt.box.valid(), "ground-truth box must have positive size");
    RGBT_REQUIRE(gt.box.x_min >= 0 && gt.box.y_min >= 0 && gt.box.x_max <= rgb.width &&
                     gt.box.y_max <= rgb.height,
                 "ground-truth box outside the image");
  }
}

void SynthConfig::validate() const {
  RGBT_REQUIRE(height >= 8 && width >= 8, "synthetic image size too small");
  RGBT_REQUIRE(min_pedestrians >= 0 && max_pedestrians >= min_pedestrians,
               "invalid pedestrian count range");
  RGBT_REQUIRE(min_pedestrian_height > 0 && max_pedestrian_height >= min_pedestrian_height &&
                   max_pedestrian_height <= height,
               "invalid pedestrian height range");
  RGBT_REQUIRE(min_aspect > 0 && max_aspect >= min_aspect, "invalid aspect range");
  RGBT_REQUIRE(thermal_only_fraction >= 0 && rgb_only_fraction >= 0 &&
                   thermal_only_fraction + rgb_only_fraction <= 1,
               "visibility fractions must be non-negative and sum to at most 1");
  RGBT_REQUIRE(night_fraction >= 0 && night_fraction <= 1 && night_thermal_only_prob >= 0 &&
                   night_thermal_only_prob <= 1,
               "night probabilities must lie in [0, 1]");
  RGBT_REQUIRE(train_size >= 0 && test_size >= 0, "split sizes must be non-negative");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"height", c.height},
       {"width", c.width},
       {"min_pedestrians", c.min_pedestrians},
       {"max_pedestrians", c.max_pedestrians},
       {"min_pedestrian_height", c.min_pedestrian_height},
       {"max_pedestrian_height", c.max_pedestrian_height},
       {"min_aspect", c.min_aspect},
       {"max_aspect", c.max_aspect},
       {"thermal_only_fraction", c.thermal_only_fraction},
       {"rgb_only_fraction", c.rgb_only_fraction},
       {"night_fraction", c.night_fraction},
       {"night_thermal_only_prob", c.night_thermal_only_prob},
       {"night_rgb_gain", c.night_rgb_gain},
       {"rgb_noise", c.rgb_noise},
       {"thermal_noise", c.thermal_noise},
       {"max_clutter", c.max_clutter},
       {"train_size", c.train_size},
       {"test_size", c.test_size},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.height = j.value("height", d.height);
  c.width = j.value("width", d.width);
  c.min_pedestrians = j.value("min_pedestrians", d.min_pedestrians);
  c.max_pedestrians = j.value("max_pedestrians", d.max_pedestrians);
  c.min_pedestrian_height = j.value("min_pedestrian_height", d.min_pedestrian_height);
  c.max_pedestrian_height = j.value("max_pedestrian_height", d.max_pedestrian_height);
  c.min_aspect = j.value("min_aspect", d.min_aspect);
  c.max_aspect = j.value("max_aspect", d.max_aspect);
  c.thermal_only_fraction = j.value("thermal_only_fraction", d.thermal_only_fraction);
  c.rgb_only_fraction = j.value("rgb_only_fraction", d.rgb_only_fraction);
  c.night_fraction = j.value("night_fraction", d.night_fraction);
  c.night_thermal_only_prob = j.value("night_thermal_only_prob", d.night_thermal_only_prob);
  c.night_rgb_gain = j.value("night_rgb_gain", d.night_rgb_gain);
  c.rgb_noise = j.value("rgb_noise", d.rgb_noise);
  c.thermal_noise = j.value("thermal_noise", d.thermal_noise);
  c.max_clutter = j.value("max_clutter", d.max_clutter);
  c.train_size = j.value("train_size", d.train_size);
  c.test_size = j.value("test_size", d.test_size);
  c.seed = j.value("seed", d.seed);
}

// ---------------------------------------------------------------- rendering

namespace {

using Color = std::array<double, 3>;

// Floating-point canvas; quantized once at the end.
struct Canvas {
  int h, w, c;
  std::vector<double> v;
  Canvas(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_) {}
  double& at(int y, int x, int k) { return v[(static_cast<std::size_t>(y) * w + x) * c + k]; }

  void rect(int x0, int y0, int x1, int y1, const double* color) {
    for (int y = std::max(0, y0); y < std::min(h, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(w, x1); ++x)
        for (int k = 0; k < c; ++k) at(y, x, k) = color[k];
  }
  void ellipse(double cx, double cy, double rx, double ry, const double* color) {
    for (int y = std::max(0, static_cast<int>(cy - ry)); y < std::min(h, static_cast<int>(cy + ry) + 1); ++y)
      for (int x = std::max(0, static_cast<int>(cx - rx)); x < std::min(w, static_cast<int>(cx + rx) + 1); ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0)
          for (int k = 0; k < c; ++k) at(y, x, k) = color[k];
      }
  }
  Image quantize(Rng& rng, double noise, double gain) const {
    std::normal_distribution<double> n(0.0, noise);
    Image img(h, w, c);
    for (std::size_t i = 0; i < v.size(); ++i)
      img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v[i] * gain + n(rng)), 0L, 255L));
    return img;
  }
};

Color random_color(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

double color_distance(const Color& a, const Color& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

Color contrasting(Rng& rng, const Color& background) {
  Color c = random_color(rng, 0, 255);
  for (int i = 0; i < 32 && color_distance(c, background) < 150; ++i) c = random_color(rng, 0, 255);
  return c;
}

}  // namespace

ScenePair generate_scene(Rng& rng, const SynthConfig& cfg, std::string image_id) {
  cfg.validate();
  const int h = cfg.height, w = cfg.width;
  ScenePair scene;
  scene.meta.image_id = std::move(image_id);
  scene.meta.time = bernoulli(rng, cfg.night_fraction) ? TimeOfDay::kNight : TimeOfDay::kDay;
  const bool night = scene.meta.time == TimeOfDay::kNight;

  // Backgrounds: smooth vertical gradient plus wide clutter blocks.
  Canvas rgb(h, w, 3), thermal(h, w, 1);
  const Color sky = random_color(rng, 60, 200);
  const Color ground = random_color(rng, 60, 200);
  const double cool_top = uniform(rng, 35, 75), cool_bottom = uniform(rng, 35, 75);
  for (int y = 0; y < h; ++y) {
    const double t = static_cast<double>(y) / (h - 1);
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < 3; ++k) rgb.at(y, x, k) = (1 - t) * sky[k] + t * ground[k];
      thermal.at(y, x, 0) = (1 - t) * cool_top + t * cool_bottom;
    }
  }
  const int clutter = cfg.max_clutter > 0 ? uniform_int(rng, 0, cfg.max_clutter) : 0;
  for (int i = 0; i < clutter; ++i) {
    const int bw = uniform_int(rng, w / 8, w / 3), bh = uniform_int(rng, 3, std::max(3, bw / 2));
    const int x0 = uniform_int(rng, 0, w - bw), y0 = uniform_int(rng, 0, h - bh);
    const Color c = random_color(rng, 0, 255);
    rgb.rect(x0, y0, x0 + bw, y0 + bh, c.data());
    if (bernoulli(rng, 0.5)) {
      const double warm = uniform(rng, 100, 160);
      thermal.rect(x0, y0, x0 + bw, y0 + bh, &warm);
    }
  }

  const Color mean_bg{(sky[0] + ground[0]) / 2, (sky[1] + ground[1]) / 2, (sky[2] + ground[2]) / 2};
  const int count = uniform_int(rng, cfg.min_pedestrians, cfg.max_pedestrians);
  for (int p = 0; p < count; ++p) {
    Box box;
    bool placed = false;
    for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
      const int ph = static_cast<int>(std::lround(
          uniform(rng, cfg.min_pedestrian_height, cfg.max_pedestrian_height)));
      const int pw = std::max(2, static_cast<int>(std::lround(ph * uniform(rng, cfg.min_aspect, cfg.max_aspect))));
      if (pw > w || ph > h) continue;
      const int x0 = uniform_int(rng, 0, w - pw), y0 = uniform_int(rng, 0, h - ph);
      box = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x0 + pw),
             static_cast<double>(y0 + ph)};
      placed = std::none_of(scene.gts.begin(), scene.gts.end(),
                            [&](const GroundTruth& g) { return iou(g.box, box) > 0.2; });
    }
    if (!placed) continue;

    GroundTruth gt{box, true, true, false};
    const double r = uniform(rng, 0.0, 1.0);
    if (night) {
      if (r < cfg.night_thermal_only_prob) gt.visible_rgb = false;
    } else if (r < cfg.thermal_only_fraction) {
      gt.visible_rgb = false;
    } else if (r < cfg.thermal_only_fraction + cfg.rgb_only_fraction) {
      gt.visible_thermal = false;
    }

    const int x0 = static_cast<int>(box.x_min), y0 = static_cast<int>(box.y_min);
    const int x1 = static_cast<int>(box.x_max), y1 = static_cast<int>(box.y_max);
    const double bw = box.width(), bh = box.height();
    const double head_r = std::max(1.0, 0.11 * bh);
    const int neck = y0 + static_cast<int>(std::lround(2 * head_r));
    const int waist = neck + static_cast<int>(std::lround(0.42 * (y1 - neck)));
    const int arm = static_cast<int>(std::lround(0.15 * bw));
    if (gt.visible_rgb) {
      const Color skin = {uniform(rng, 150, 230), uniform(rng, 100, 180), uniform(rng, 80, 150)};
      const Color shirt = contrasting(rng, mean_bg);
      const Color pants = contrasting(rng, mean_bg);
      // Dark silhouette outline: the cue that separates people from flat clutter.
      const Color outline = {20, 20, 20};
      rgb.ellipse(box.center_x(), y0 + head_r, head_r * 0.9 + 1, head_r + 1, outline.data());
      rgb.rect(x0 - 1, neck - 1, x1 + 1, waist, outline.data());
      rgb.rect(x0 + arm - 1, waist, x1 - arm + 1, y1 + 1, outline.data());
      rgb.ellipse(box.center_x(), y0 + head_r, head_r * 0.9, head_r, skin.data());
      rgb.rect(x0, neck, x1, waist, shirt.data());
      rgb.rect(x0 + arm, waist, x1 - arm, y1, pants.data());
    }
    if (gt.visible_thermal) {
      const double body = uniform(rng, 165, 225);
      const double head = std::min(255.0, body + 20);
      thermal.ellipse(box.center_x(), y0 + head_r, head_r * 0.9, head_r, &head);
      thermal.rect(x0, neck, x1, waist, &body);
      const double legs = body - 15;
      thermal.rect(x0 + arm, waist, x1 - arm, y1, &legs);
    }
    scene.gts.push_back(gt);
  }

  scene.rgb = rgb.quantize(rng, cfg.rgb_noise, night ? cfg.night_rgb_gain : 1.0);
  scene.thermal = thermal.quantize(rng, cfg.thermal_noise, 1.0);
  return scene;
}

ScenePair generate_split_scene(const SynthConfig& cfg, Split split, int index) {
  Rng rng(derive_seed(cfg.seed, split == Split::kTrain ? 1 : 2, static_cast<std::uint64_t>(index)));
  char id[32];
  std::snprintf(id, sizeof id, "%s_%05d", to_string(split), index);
  return generate_scene(rng, cfg, id);
}

std::vector<ScenePair> generate_split(const SynthConfig& cfg, Split split) {
  const int n = split == Split::kTrain ? cfg.train_size : cfg.test_size;
  std::vector<ScenePair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(generate_split_scene(cfg, split, i));
  return out;
}

// ---------------------------------------------------------------- persistence

nlohmann::json annotations_to_json(const std::vector<GroundTruth>& gts, const SceneMeta& meta) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& g : gts) {
    objects.push_back({{"box", {g.box.x_min, g.box.y_min, g.box.x_max, g.box.y_max}},
                       {"visible_rgb", g.visible_rgb},
                       {"visible_thermal", g.visible_thermal},
                       {"is_ignore", g.is_ignore}});
  }
  return {{"image_id", meta.image_id}, {"time", to_string(meta.time)}, {"objects", objects}};
}

std::vector<GroundTruth> annotations_from_json(const nlohmann::json& j, SceneMeta* meta) {
  if (meta) {
    meta->image_id = j.value("image_id", std::string{});
    meta->time = time_of_day_from_string(j.value("time", std::string{"day"}));
  }
  std::vector<GroundTruth> out;
  for (const auto& o : j.at("objects")) {
    const auto& b = o.at("box");
    RGBT_REQUIRE(b.is_array() && b.size() == 4, "annotation box must be [x_min, y_min, x_max, y_max]");
    GroundTruth g;
    g.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    g.visible_rgb = o.value("visible_rgb", true);
    g.visible_thermal = o.value("visible_thermal", true);
    g.is_ignore = o.value("is_ignore", false);
    out.push_back(g);
  }
  return out;
}

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

}  // namespace

void write_annotations(const fs::path& path, const std::vector<GroundTruth>& gts,
                       const SceneMeta& meta) {
  write_text(path, annotations_to_json(gts, meta).dump(2) + "\n");
}

std::vector<GroundTruth> read_annotations(const fs::path& path, SceneMeta* meta) {
  return annotations_from_json(read_json(path), meta);
}

void write_scene(const fs::path& dir, const ScenePair& scene) {
  ensure_dir(dir / "rgb");
  ensure_dir(dir / "thermal");
  ensure_dir(dir / "annotations");
  const std::string& id = scene.meta.image_id;
  write_png(dir / "rgb" / (id + ".png"), scene.rgb);
  write_png(dir / "thermal" / (id + ".png"), scene.thermal);
  write_annotations(dir / "annotations" / (id + ".json"), scene.gts, scene.meta);
}

ScenePair read_scene(const fs::path& dir, const ManifestEntry& entry) {
  ScenePair s;
  s.rgb = read_png(dir / "rgb" / (entry.image_id + ".png"));
  s.thermal = read_png(dir / "thermal" / (entry.image_id + ".png"));
  s.gts = read_annotations(dir / "annotations" / (entry.image_id + ".json"), &s.meta);
  s.meta.image_id = entry.image_id;
  s.meta.time = entry.time;
  if (s.rgb.channels == 1) {
    // Tolerate grayscale visible images by replicating the channel.
    Image rgb(s.rgb.height, s.rgb.width, 3);
    for (std::size_t i = 0; i < s.rgb.pixels.size(); ++i)
      for (int k = 0; k < 3; ++k) rgb.pixels[i * 3 + static_cast<std::size_t>(k)] = s.rgb.pixels[i];
    s.rgb = std::move(rgb);
  }
  if (s.thermal.channels == 3) {
    Image t(s.thermal.height, s.thermal.width, 1);
    for (std::size_t i = 0; i < t.pixels.size(); ++i) t.pixels[i] = s.thermal.pixels[i * 3];
    s.thermal = std::move(t);
  }
  s.validate();
  return s;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  auto entries = [](const std::vector<ManifestEntry>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : v) a.push_back({{"image_id", e.image_id}, {"time", to_string(e.time)}});
    return a;
  };
  const nlohmann::json j{{"train", entries(manifest.train)},
                         {"test", entries(manifest.test)},
                         {"config", manifest.config}};
  write_text(path, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const auto j = read_json(path);
  auto entries = [](const nlohmann::json& a) {
    std::vector<ManifestEntry> v;
    for (const auto& e : a)
      v.push_back({e.at("image_id").get<std::string>(),
                   time_of_day_from_string(e.value("time", std::string{"day"}))});
    return v;
  };
  Manifest m;
  m.train = entries(j.value("train", nlohmann::json::array()));
  m.test = entries(j.value("test", nlohmann::json::array()));
  m.config = j.value("config", nlohmann::json::object());
  return m;
}

Manifest generate_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest m;
  m.config = cfg;
  for (Split split : {Split::kTrain, Split::kTest}) {
    const int n = split == Split::kTrain ? cfg.train_size : cfg.test_size;
    auto& entries = split == Split::kTrain ? m.train : m.test;
    for (int i = 0; i < n; ++i) {
      const ScenePair s = generate_split_scene(cfg, split, i);
      write_scene(out_dir, s);
      entries.push_back({s.meta.image_id, s.meta.time});
    }
  }
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

std::vector<ScenePair> load_split(const fs::path& dataset_dir, Split split) {
  const Manifest m = read_manifest(dataset_dir / "manifest.json");
  const auto& entries = split == Split::kTrain ? m.train : m.test;
  std::vector<ScenePair> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(read_scene(dataset_dir, e));
  return out;
}

}  // namespace rgbt
