// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rgbt/augmentation.hpp"
#include "rgbt/data.hpp"
#include "rgbt/evaluation.hpp"
#include "rgbt/model.hpp"

namespace rgbt {

struct TrainConfig {
  int epochs = 40;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> lr_decay_epochs{20, 36};
  double lr_gamma = 0.1;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int early_stop_patience = 50;   // epochs without validation improvement
  double validation_fraction = 0.1;  // tail of the training split held out
  bool masking_augmentation = true;
  double grad_clip = 0.0;  // global L2 norm; 0 disables

  void validate() const;
};

struct ExperimentConfig {
  SynthConfig synth;
  ModelConfig model;
  MaskingPolicy augmentation;
  TrainConfig train;
  EvalFilter eval;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Reads a JSON experiment config; absent keys keep their defaults, unknown
/// top-level sections are rejected. The model's image size follows `synth`.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string hash_hex(std::uint64_t h);

}  // namespace rgbt
