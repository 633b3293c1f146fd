// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rgbt/detection.hpp"
#include "rgbt/image.hpp"
#include "rgbt/rng.hpp"

namespace rgbt {

enum class TimeOfDay { kDay, kNight };
const char* to_string(TimeOfDay t);
TimeOfDay time_of_day_from_string(const std::string& s);

struct SceneMeta {
  std::string image_id;
  TimeOfDay time = TimeOfDay::kDay;
};

/// Co-registered RGB (3 channels) and thermal (1 channel) images with
/// modality-aware ground truth.
struct ScenePair {
  Image rgb;
  Image thermal;
  std::vector<GroundTruth> gts;
  SceneMeta meta;

  int height() const { return rgb.height; }
  int width() const { return rgb.width; }
  void validate() const;
};

struct SynthConfig {
  int height = 64;
  int width = 96;
  int min_pedestrians = 0;
  int max_pedestrians = 4;
  double min_pedestrian_height = 16;
  double max_pedestrian_height = 44;
  /// Width / height of the body.
  double min_aspect = 0.35;
  double max_aspect = 0.5;
  /// Fractions of day-time pedestrians rendered in one modality only.
  double thermal_only_fraction = 0.05;
  double rgb_only_fraction = 0.05;
  /// Fraction of scenes tagged night: RGB is darkened and pedestrians are
  /// thermal-only with `night_thermal_only_prob`.
  double night_fraction = 0.3;
  double night_thermal_only_prob = 0.3;
  double night_rgb_gain = 0.35;
  double rgb_noise = 8.0;
  double thermal_noise = 6.0;
  int max_clutter = 4;
  int train_size = 200;
  int test_size = 50;
  std::uint64_t seed = 42;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Renders one scene. Pedestrians are tall silhouettes: bright on a cool
/// background in thermal, coloured clothing on a textured background in RGB.
/// Visibility flags record which modalities rendered them.
ScenePair generate_scene(Rng& rng, const SynthConfig& cfg, std::string image_id = "scene");

enum class Split { kTrain, kTest };
const char* to_string(Split s);

/// Scene `index` of a split, generated from a seed derived from
/// (cfg.seed, split, index) so any subset can be regenerated independently.
ScenePair generate_split_scene(const SynthConfig& cfg, Split split, int index);
std::vector<ScenePair> generate_split(const SynthConfig& cfg, Split split);

struct ManifestEntry {
  std::string image_id;
  TimeOfDay time = TimeOfDay::kDay;
};

struct Manifest {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  nlohmann::json config;
};

/// Writes rgb/<id>.png, thermal/<id>.png, annotations/<id>.json and
/// manifest.json under `out_dir`.
Manifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

void write_scene(const std::filesystem::path& dir, const ScenePair& scene);
ScenePair read_scene(const std::filesystem::path& dir, const ManifestEntry& entry);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);
std::vector<ScenePair> load_split(const std::filesystem::path& dataset_dir, Split split);

/// Canonical per-image annotation format.
nlohmann::json annotations_to_json(const std::vector<GroundTruth>& gts, const SceneMeta& meta);
std::vector<GroundTruth> annotations_from_json(const nlohmann::json& j, SceneMeta* meta = nullptr);
void write_annotations(const std::filesystem::path& path, const std::vector<GroundTruth>& gts,
                       const SceneMeta& meta);
std::vector<GroundTruth> read_annotations(const std::filesystem::path& path,
                                          SceneMeta* meta = nullptr);

}  // namespace rgbt
