// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgbt/trainer.hpp"

namespace rgbt {

struct MetricsEntry {
  std::string scenario;
  std::string split;
  std::optional<double> mr;
  std::vector<double> fppi;
  std::vector<double> miss_rate;
};

struct MetricsFile {
  std::string label;
  std::vector<MetricsEntry> entries;

  const MetricsEntry* find(const std::string& scenario, const std::string& split) const;
};

/// {label, metrics: [{scenario, split, mr, curve}]}
nlohmann::json metrics_file_json(const std::string& label, const MRTable& table);
MetricsFile metrics_from_table(const std::string& label, const MRTable& table);
MetricsFile parse_metrics_file(const nlohmann::json& j);
MetricsFile read_metrics_file(const std::filesystem::path& path);

/// Aligned text table: one row per scenario, MR columns All/Day/Night.
std::string format_mr_table(const MetricsFile& metrics);

/// Mean of (method - baseline) over cells defined in both; nullopt if none.
std::optional<double> average_difference(const MetricsFile& method, const MetricsFile& baseline);

struct ReportPaths {
  std::filesystem::path bar_svg, bar_csv, curves_svg, curves_csv, summary_md;
};

/// Writes the MR-by-scenario bar chart, the FPPI/miss-rate curves (All split)
/// and a markdown summary. The first file is the baseline for differences.
ReportPaths write_report(std::span<const MetricsFile> files, const std::filesystem::path& out_dir);

}  // namespace rgbt
