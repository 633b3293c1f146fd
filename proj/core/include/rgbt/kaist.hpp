// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rgbt/data.hpp"

namespace rgbt::kaist {

/// Import of KAIST-style text annotations. Two line layouts are accepted:
///
///   sanitized (bbGt v3):  label x y w h occ vx vy vw vh ignore angle
///   paired:               label xr yr wr hr xt yt wt ht [occ]
///
/// A file may start with a `% bbGt version=3` or `% paired version=1` header;
/// otherwise each line's layout is inferred from its token count. In paired
/// lines a box with non-positive size means "not visible in that modality";
/// the stored box encloses the visible ones. Labels other than `person`,
/// heavy occlusion (occ >= 2) and the ignore flag map to is_ignore.
enum class Layout { kAuto, kSanitized, kPaired };

struct ParseIssue {
  int line = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<GroundTruth> objects;
  std::vector<ParseIssue> issues;
};

/// Lenient parse: malformed lines are skipped and reported.
ParseResult parse_annotations(const std::filesystem::path& path);
ParseResult parse_annotations_text(const std::string& text, const std::string& source = "<text>");

/// Strict parse: the first malformed line raises ParseError(file, line, reason).
std::vector<GroundTruth> load_kaist_annotations(const std::filesystem::path& path);

/// Loads a visible/LWIR image pair with its annotation file.
ScenePair load_kaist_scene(const std::filesystem::path& visible_png,
                           const std::filesystem::path& lwir_png,
                           const std::filesystem::path& annotation_txt, std::string image_id,
                           TimeOfDay time);

}  // namespace rgbt::kaist
