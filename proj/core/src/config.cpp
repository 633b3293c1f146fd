// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/config.hpp"

#include <cstdio>
#include <fstream>

#include "rgbt/error.hpp"

namespace rgbt {

void TrainConfig::validate() const {
  RGBT_REQUIRE(epochs >= 1, "epochs must be positive");
  RGBT_REQUIRE(batch_size >= 1, "batch_size must be positive");
  RGBT_REQUIRE(learning_rate > 0, "learning_rate must be positive");
  RGBT_REQUIRE(momentum >= 0 && momentum < 1, "momentum must be in [0, 1)");
  RGBT_REQUIRE(weight_decay >= 0, "weight_decay must be non-negative");
  RGBT_REQUIRE(lr_gamma > 0, "lr_gamma must be positive");
  RGBT_REQUIRE(lambda > 0, "lambda must be positive");
  RGBT_REQUIRE(early_stop_patience >= 1, "early_stop_patience must be positive");
  RGBT_REQUIRE(validation_fraction >= 0 && validation_fraction < 1,
               "validation_fraction must be in [0, 1)");
  RGBT_REQUIRE(grad_clip >= 0, "grad_clip must be non-negative");
  for (int e : lr_decay_epochs)
    RGBT_REQUIRE(e >= 1 && e < epochs, "lr decay epochs must lie in [1, epochs)");
}

void ExperimentConfig::validate() const {
  synth.validate();
  augmentation.validate();
  train.validate();
  model.validate();
  RGBT_REQUIRE(model.image_height == synth.height && model.image_width == synth.width,
               "model image size must match the synthetic image size");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"momentum", c.momentum},
       {"weight_decay", c.weight_decay},
       {"lr_decay_epochs", c.lr_decay_epochs},
       {"lr_gamma", c.lr_gamma},
       {"lambda", c.lambda},
       {"seed", c.seed},
       {"early_stop_patience", c.early_stop_patience},
       {"validation_fraction", c.validation_fraction},
       {"masking_augmentation", c.masking_augmentation},
       {"grad_clip", c.grad_clip}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.momentum = j.value("momentum", d.momentum);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.lr_decay_epochs = j.value("lr_decay_epochs", d.lr_decay_epochs);
  c.lr_gamma = j.value("lr_gamma", d.lr_gamma);
  c.lambda = j.value("lambda", d.lambda);
  c.seed = j.value("seed", d.seed);
  c.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.masking_augmentation = j.value("masking_augmentation", d.masking_augmentation);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
}

namespace {

nlohmann::json backbone_json(const BackboneConfig& b) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : b.stages)
    stages.push_back({{"out_channels", s.out_channels},
                      {"stride", s.stride},
                      {"depth", s.depth},
                      {"kernel", s.kernel}});
  return {{"stages", stages},
          {"ha_insertion_index", b.ha_insertion_index},
          {"fusion_channels", b.fusion_channels},
          {"hybrid_attention", b.hybrid_attention},
          {"rgb_channels", b.rgb_channels},
          {"thermal_channels", b.thermal_channels},
          {"init_std", b.init_std}};
}

BackboneConfig backbone_from_json(const nlohmann::json& j) {
  BackboneConfig b = BackboneConfig::default_config();
  if (j.contains("stages")) {
    b.stages.clear();
    for (const auto& s : j.at("stages")) {
      StageSpec spec;
      spec.out_channels = s.value("out_channels", spec.out_channels);
      spec.stride = s.value("stride", spec.stride);
      spec.depth = s.value("depth", spec.depth);
      spec.kernel = s.value("kernel", spec.kernel);
      b.stages.push_back(spec);
    }
  }
  b.ha_insertion_index = j.value("ha_insertion_index", b.ha_insertion_index);
  b.fusion_channels = j.value("fusion_channels", b.fusion_channels);
  b.hybrid_attention = j.value("hybrid_attention", b.hybrid_attention);
  b.rgb_channels = j.value("rgb_channels", b.rgb_channels);
  b.thermal_channels = j.value("thermal_channels", b.thermal_channels);
  b.init_std = j.value("init_std", b.init_std);
  return b;
}

const char* to_string(BlackoutLabel b) { return b == BlackoutLabel::kIgnore ? "ignore" : "absent"; }

BlackoutLabel blackout_label_from_string(const std::string& s) {
  if (s == "ignore") return BlackoutLabel::kIgnore;
  if (s == "absent") return BlackoutLabel::kAbsent;
  throw ValidationError("unknown blackout_label '" + s + "' (expected ignore or absent)");
}

}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& c) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : c.anchors.levels) levels.push_back({{"scales", l.scales}, {"ratios", l.ratios}});
  j = {{"backbone", backbone_json(c.backbone)},
       {"anchors", levels},
       {"variance", c.variance},
       {"image_height", c.image_height},
       {"image_width", c.image_width},
       {"pos_iou", c.pos_iou},
       {"blackout_label", to_string(c.blackout_label)},
       {"decode",
        {{"score_threshold", c.decode.score_threshold},
         {"nms_iou", c.decode.nms_iou},
         {"top_k", c.decode.top_k}}}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.backbone = j.contains("backbone") ? backbone_from_json(j.at("backbone")) : d.backbone;
  c.anchors = {};
  if (j.contains("anchors")) {
    for (const auto& l : j.at("anchors"))
      c.anchors.levels.push_back({l.at("scales").get<std::vector<double>>(),
                                  l.at("ratios").get<std::vector<double>>()});
  }
  c.variance = j.value("variance", d.variance);
  c.image_height = j.value("image_height", d.image_height);
  c.image_width = j.value("image_width", d.image_width);
  c.pos_iou = j.value("pos_iou", d.pos_iou);
  c.blackout_label = blackout_label_from_string(j.value("blackout_label", std::string("ignore")));
  if (j.contains("decode")) {
    const auto& dj = j.at("decode");
    c.decode.score_threshold = dj.value("score_threshold", d.decode.score_threshold);
    c.decode.nms_iou = dj.value("nms_iou", d.decode.nms_iou);
    c.decode.top_k = dj.value("top_k", d.decode.top_k);
  }
  c.finalize();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"synth", c.synth},
       {"model", c.model},
       {"augmentation", c.augmentation},
       {"train", c.train},
       {"eval", {{"min_height", c.eval.min_height}}}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) { c = parse_experiment_config(j); }

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  RGBT_REQUIRE(j.is_object(), "experiment config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    RGBT_REQUIRE(key == "synth" || key == "model" || key == "augmentation" || key == "train" ||
                     key == "eval",
                 "unknown config section '" + key + "'");
  }
  ExperimentConfig c;
  if (j.contains("synth")) c.synth = j.at("synth").get<SynthConfig>();
  nlohmann::json model = j.value("model", nlohmann::json::object());
  model["image_height"] = c.synth.height;
  model["image_width"] = c.synth.width;
  c.model = model.get<ModelConfig>();
  if (j.contains("augmentation")) c.augmentation = j.at("augmentation").get<MaskingPolicy>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("eval")) c.eval.min_height = j.at("eval").value("min_height", c.eval.min_height);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return parse_experiment_config(j);
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rgbt
