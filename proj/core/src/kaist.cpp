// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/kaist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "rgbt/error.hpp"

namespace rgbt::kaist {
namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::optional<double> number(const std::string& s) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

struct LineResult {
  std::optional<GroundTruth> gt;
  std::string error;
};

LineResult parse_numbers(const std::vector<std::string>& tok, std::vector<double>& values) {
  for (std::size_t i = 1; i < tok.size(); ++i) {
    auto v = number(tok[i]);
    if (!v) return {std::nullopt, "field " + std::to_string(i + 1) + " ('" + tok[i] + "') is not numeric"};
    if (!std::isfinite(*v))
      return {std::nullopt, "field " + std::to_string(i + 1) + " ('" + tok[i] + "') is not finite"};
    values.push_back(*v);
  }
  return {};
}

LineResult parse_sanitized(const std::vector<std::string>& tok) {
  if (tok.size() != 12)
    return {std::nullopt, "expected 12 fields (label x y w h occ vx vy vw vh ignore angle), got " +
                              std::to_string(tok.size())};
  std::vector<double> v;
  if (auto r = parse_numbers(tok, v); !r.error.empty()) return r;
  const double x = v[0], y = v[1], w = v[2], h = v[3];
  if (w <= 0 || h <= 0) return {std::nullopt, "box width and height must be positive"};
  GroundTruth gt;
  gt.box = {x, y, x + w, y + h};
  const int occlusion = static_cast<int>(v[4]);
  const bool ignore_flag = v[9] != 0;
  gt.is_ignore = tok[0] != "person" || occlusion >= 2 || ignore_flag;
  return {gt, {}};
}

LineResult parse_paired(const std::vector<std::string>& tok) {
  if (tok.size() != 9 && tok.size() != 10)
    return {std::nullopt, "expected 9 or 10 fields (label xr yr wr hr xt yt wt ht [occ]), got " +
                              std::to_string(tok.size())};
  std::vector<double> v;
  if (auto r = parse_numbers(tok, v); !r.error.empty()) return r;
  const Box rgb{v[0], v[1], v[0] + v[2], v[1] + v[3]};
  const Box thermal{v[4], v[5], v[4] + v[6], v[5] + v[7]};
  GroundTruth gt;
  gt.visible_rgb = v[2] > 0 && v[3] > 0;
  gt.visible_thermal = v[6] > 0 && v[7] > 0;
  if (!gt.visible_rgb && !gt.visible_thermal)
    return {std::nullopt, "object has no positive-size box in either modality"};
  if (gt.visible_rgb && gt.visible_thermal) {
    gt.box = {std::min(rgb.x_min, thermal.x_min), std::min(rgb.y_min, thermal.y_min),
              std::max(rgb.x_max, thermal.x_max), std::max(rgb.y_max, thermal.y_max)};
  } else {
    gt.box = gt.visible_rgb ? rgb : thermal;
  }
  const int occlusion = tok.size() == 10 ? static_cast<int>(v[8]) : 0;
  gt.is_ignore = tok[0] != "person" || occlusion >= 2;
  return {gt, {}};
}

}  // namespace

ParseResult parse_annotations_text(const std::string& text, const std::string& source) {
  (void)source;
  ParseResult result;
  Layout layout = Layout::kAuto;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0].starts_with("%")) {
      if (line.find("bbGt") != std::string::npos) layout = Layout::kSanitized;
      if (line.find("paired") != std::string::npos) layout = Layout::kPaired;
      continue;
    }
    Layout this_line = layout;
    if (this_line == Layout::kAuto) {
      if (tok.size() == 12) {
        this_line = Layout::kSanitized;
      } else if (tok.size() == 9 || tok.size() == 10) {
        this_line = Layout::kPaired;
      } else {
        result.issues.push_back({line_no, "cannot infer line layout from " +
                                              std::to_string(tok.size()) + " fields"});
        continue;
      }
    }
    const LineResult r = this_line == Layout::kSanitized ? parse_sanitized(tok) : parse_paired(tok);
    if (r.gt) {
      result.objects.push_back(*r.gt);
    } else {
      result.issues.push_back({line_no, r.error});
    }
  }
  return result;
}

ParseResult parse_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open annotation file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations_text(ss.str(), path.string());
}

std::vector<GroundTruth> load_kaist_annotations(const std::filesystem::path& path) {
  ParseResult r = parse_annotations(path);
  if (!r.issues.empty()) throw ParseError(path.string(), r.issues[0].line, r.issues[0].reason);
  return std::move(r.objects);
}

ScenePair load_kaist_scene(const std::filesystem::path& visible_png,
                           const std::filesystem::path& lwir_png,
                           const std::filesystem::path& annotation_txt, std::string image_id,
                           TimeOfDay time) {
  ScenePair s;
  s.rgb = read_png(visible_png);
  s.thermal = read_png(lwir_png);
  if (s.thermal.channels == 3) {
    Image t(s.thermal.height, s.thermal.width, 1);
    for (std::size_t i = 0; i < t.pixels.size(); ++i) t.pixels[i] = s.thermal.pixels[i * 3];
    s.thermal = std::move(t);
  }
  s.gts = load_kaist_annotations(annotation_txt);
  for (auto& g : s.gts) g.box = g.box.clipped(s.rgb.width, s.rgb.height);
  s.gts.erase(std::remove_if(s.gts.begin(), s.gts.end(), [](const GroundTruth& g) { return !g.box.valid(); }),
              s.gts.end());
  s.meta = {std::move(image_id), time};
  s.validate();
  return s;
}

}  // namespace rgbt::kaist
