// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>

#include "rgbt/data.hpp"

namespace rgbt {

/// Training-time modality masking. Every probability is the marginal
/// frequency of the corresponding event. Full-modality events are mutually
/// exclusive; patch events are drawn only when no full event fired, with
/// probabilities rescaled so their marginals still match the policy.
struct MaskingPolicy {
  double p_full_rgb = 0.10;
  double p_full_thermal = 0.10;
  double p_patch_rgb = 0.10;
  double p_patch_thermal = 0.10;
  /// Patch side lengths as fractions of the image dimensions.
  double patch_min = 0.2;
  double patch_max = 0.5;
  int max_placement_tries = 16;

  /// Geometric/photometric pre-step applied identically to both modalities.
  double flip_prob = 0.5;
  double brightness_jitter = 0.1;

  void validate() const;
};

void to_json(nlohmann::json& j, const MaskingPolicy& p);
void from_json(const nlohmann::json& j, MaskingPolicy& p);

struct MaskEvents {
  bool full_rgb = false;
  bool full_thermal = false;
  bool patch_rgb = false;
  bool patch_thermal = false;
};

struct TrainingMasks {
  ModalityMask rgb;
  ModalityMask thermal;
  MaskEvents events;
};

/// Draws a pair of image-resolution masks. No pixel is ever masked in both
/// modalities. A patch that cannot be placed without overlapping the other
/// modality's patch within `max_placement_tries` is skipped.
TrainingMasks sample_training_masks(Rng& rng, const MaskingPolicy& policy, int height, int width);

/// Zeroes every pixel whose mask entry is 0 in the corresponding modality.
ScenePair apply_masks(const ScenePair& pair, const ModalityMask& m_rgb,
                      const ModalityMask& m_thermal);

/// Horizontal flip and brightness jitter, identical for both modalities.
void apply_baseline_augmentation(ScenePair& pair, Rng& rng, const MaskingPolicy& policy);

/// Number of calls into this module's sampling/augmentation entry points
/// since process start. Evaluation code must never move it.
std::uint64_t augmentation_invocations();

}  // namespace rgbt
