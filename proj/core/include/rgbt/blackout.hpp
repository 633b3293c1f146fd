// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <utility>

#include "rgbt/data.hpp"

namespace rgbt {

/// Inference-time sensor conditions.
enum class Scenario {
  kDual,             // both modalities intact
  kRgbBlackout,      // RGB sensor failure
  kThermalBlackout,  // thermal sensor failure
  kSidesRgbThermal,  // RGB left third and thermal right third missing
  kSidesThermalRgb,  // thermal left third and RGB right third missing
  kSurrounding,      // thermal only covers a centred crop
};

constexpr std::array<Scenario, 6> kAllScenarios{
    Scenario::kDual,           Scenario::kRgbBlackout,     Scenario::kThermalBlackout,
    Scenario::kSidesRgbThermal, Scenario::kSidesThermalRgb, Scenario::kSurrounding};

constexpr std::array<Scenario, 3> kPartialOverlapScenarios{
    Scenario::kSidesRgbThermal, Scenario::kSidesThermalRgb, Scenario::kSurrounding};

/// CLI names: dual, rgb_blackout, thermal_blackout, sides_rt, sides_tr, surrounding.
std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);
/// Human-readable column title.
std::string scenario_title(Scenario s);

struct ScenarioMasks {
  ModalityMask rgb;
  ModalityMask thermal;
};

/// Side portions are floor(w / 3) columns wide (the centre absorbs the
/// remainder). The surrounding border is floor(0.1875 * h) rows and
/// floor(0.1875 * w) columns, i.e. 96 and 120 at 512 x 640.
ScenarioMasks scenario_masks(int height, int width, Scenario s);

struct ScenarioResult {
  ScenePair pair;
  ModalityMask rgb;
  ModalityMask thermal;
};

/// Zeroes the blacked-out pixels and returns the masks used.
ScenarioResult apply_scenario(const ScenePair& pair, Scenario s);

}  // namespace rgbt
