// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/blackout.hpp"

#include "rgbt/augmentation.hpp"
#include "rgbt/error.hpp"

namespace rgbt {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kDual: return "dual";
    case Scenario::kRgbBlackout: return "rgb_blackout";
    case Scenario::kThermalBlackout: return "thermal_blackout";
    case Scenario::kSidesRgbThermal: return "sides_rt";
    case Scenario::kSidesThermalRgb: return "sides_tr";
    case Scenario::kSurrounding: return "surrounding";
  }
  return "unknown";
}

std::string scenario_title(Scenario s) {
  switch (s) {
    case Scenario::kDual: return "Dual Modality";
    case Scenario::kRgbBlackout: return "RGB Blackout";
    case Scenario::kThermalBlackout: return "Thermal Blackout";
    case Scenario::kSidesRgbThermal: return "Sides Blackout (RGB-Thermal)";
    case Scenario::kSidesThermalRgb: return "Sides Blackout (Thermal-RGB)";
    case Scenario::kSurrounding: return "Surrounding Blackout";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  for (Scenario s : kAllScenarios)
    if (to_string(s) == name) return s;
  throw ValidationError("unknown scenario '" + name +
                        "' (expected dual, rgb_blackout, thermal_blackout, sides_rt, sides_tr "
                        "or surrounding)");
}

ScenarioMasks scenario_masks(int height, int width, Scenario s) {
  RGBT_REQUIRE(height >= 1 && width >= 1, "scenario_masks: dimensions must be positive");
  ScenarioMasks m{ModalityMask::ones(height, width), ModalityMask::ones(height, width)};
  const int third = width / 3;
  switch (s) {
    case Scenario::kDual:
      break;
    case Scenario::kRgbBlackout:
      m.rgb = ModalityMask::zeros(height, width);
      break;
    case Scenario::kThermalBlackout:
      m.thermal = ModalityMask::zeros(height, width);
      break;
    case Scenario::kSidesRgbThermal:
      RGBT_REQUIRE(width >= 3, "sides blackout needs width >= 3");
      m.rgb.fill_rect(0, height, 0, third, false);
      m.thermal.fill_rect(0, height, width - third, width, false);
      break;
    case Scenario::kSidesThermalRgb:
      RGBT_REQUIRE(width >= 3, "sides blackout needs width >= 3");
      m.thermal.fill_rect(0, height, 0, third, false);
      m.rgb.fill_rect(0, height, width - third, width, false);
      break;
    case Scenario::kSurrounding: {
      // 96 / 512 == 120 / 640 == 0.1875 == 3 / 16; integer form keeps it exact.
      const int border_y = height * 3 / 16;
      const int border_x = width * 3 / 16;
      RGBT_REQUIRE(height > 2 * border_y && width > 2 * border_x,
                   "surrounding blackout leaves no visible region");
      m.thermal = ModalityMask::zeros(height, width);
      m.thermal.fill_rect(border_y, height - border_y, border_x, width - border_x, true);
      break;
    }
  }
  return m;
}

ScenarioResult apply_scenario(const ScenePair& pair, Scenario s) {
  auto masks = scenario_masks(pair.height(), pair.width(), s);
  return {apply_masks(pair, masks.rgb, masks.thermal), std::move(masks.rgb),
          std::move(masks.thermal)};
}

}  // namespace rgbt
