// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "rgbt/error.hpp"

namespace rgbt {

Box Box::clipped(double image_w, double image_h) const {
  return {std::clamp(x_min, 0.0, image_w), std::clamp(y_min, 0.0, image_h),
          std::clamp(x_max, 0.0, image_w), std::clamp(y_max, 0.0, image_h)};
}

AnchorSpec AnchorSpec::pedestrian(std::span<const int> level_strides, double scale_per_stride) {
  AnchorSpec spec;
  for (int stride : level_strides) {
    spec.levels.push_back({{scale_per_stride * stride}, {1.0 / 0.41, 2.0, 3.0}});
  }
  return spec;
}

int AnchorSpec::anchors_per_cell(int level) const {
  const auto& l = levels[static_cast<std::size_t>(level)];
  return static_cast<int>(l.scales.size() * l.ratios.size());
}

void AnchorSpec::validate() const {
  RGBT_REQUIRE(!levels.empty(), "anchor spec has no levels");
  double previous = 0.0;
  for (const auto& l : levels) {
    RGBT_REQUIRE(!l.scales.empty() && !l.ratios.empty(), "anchor level needs scales and ratios");
    for (double s : l.scales) RGBT_REQUIRE(s > 0, "anchor scales must be positive");
    for (double r : l.ratios) RGBT_REQUIRE(r > 0, "anchor ratios must be positive");
    const double smallest = *std::min_element(l.scales.begin(), l.scales.end());
    RGBT_REQUIRE(smallest >= previous, "anchor scales must increase with level");
    previous = *std::max_element(l.scales.begin(), l.scales.end());
  }
}

std::vector<Box> generate_anchors(std::span<const std::pair<int, int>> level_shapes,
                                  const AnchorSpec& spec, int image_h, int image_w) {
  spec.validate();
  RGBT_REQUIRE(level_shapes.size() == spec.levels.size(),
               "anchor spec has " + std::to_string(spec.levels.size()) + " levels, pyramid has " +
                   std::to_string(level_shapes.size()));
  std::vector<Box> anchors;
  for (std::size_t l = 0; l < level_shapes.size(); ++l) {
    const auto [h, w] = level_shapes[l];
    RGBT_REQUIRE(h >= 1 && w >= 1 && image_h % h == 0 && image_w % w == 0,
                 "pyramid level " + std::to_string(l) + " (" + std::to_string(h) + "x" +
                     std::to_string(w) + ") does not tile the image");
    const double step_y = static_cast<double>(image_h) / h;
    const double step_x = static_cast<double>(image_w) / w;
    const auto& level = spec.levels[l];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double cx = (x + 0.5) * step_x;
        const double cy = (y + 0.5) * step_y;
        for (double scale : level.scales) {
          for (double ratio : level.ratios) {
            const double bh = scale * std::sqrt(ratio);
            const double bw = scale / std::sqrt(ratio);
            anchors.push_back(Box{cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2}.clipped(
                image_w, image_h));
          }
        }
      }
    }
  }
  return anchors;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

BoxOffsets encode_box(const Box& gt, const Box& anchor, const BoxOffsets& variance) {
  RGBT_REQUIRE(gt.valid() && anchor.valid(), "encode_box: boxes must have positive size");
  return {(gt.center_x() - anchor.center_x()) / anchor.width() / variance[0],
          (gt.center_y() - anchor.center_y()) / anchor.height() / variance[1],
          std::log(gt.width() / anchor.width()) / variance[2],
          std::log(gt.height() / anchor.height()) / variance[3]};
}

Box decode_box(const BoxOffsets& offsets, const Box& anchor, const BoxOffsets& variance,
               double image_w, double image_h) {
  RGBT_REQUIRE(anchor.valid(), "decode_box: anchor must have positive size");
  const double cx = anchor.center_x() + offsets[0] * variance[0] * anchor.width();
  const double cy = anchor.center_y() + offsets[1] * variance[1] * anchor.height();
  const double w = anchor.width() * std::exp(offsets[2] * variance[2]);
  const double h = anchor.height() * std::exp(offsets[3] * variance[3]);
  Box b{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  if (image_w > 0 && image_h > 0) b = b.clipped(image_w, image_h);
  return b;
}

AnchorAssignment match_anchors(std::span<const Box> anchors, std::span<const GroundTruth> gts,
                               double pos_iou) {
  const std::size_t na = anchors.size();
  AnchorAssignment out{std::vector<AnchorLabel>(na, AnchorLabel::kNegative),
                       std::vector<int>(na, -1)};
  if (gts.empty() || na == 0) return out;

  std::vector<double> overlaps(na * gts.size());
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t g = 0; g < gts.size(); ++g)
      overlaps[a * gts.size() + g] = iou(anchors[a], gts[g].box);

  // Threshold matching against every gt (ignored ones included).
  for (std::size_t a = 0; a < na; ++a) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = overlaps[a * gts.size() + g];
      // Prefer a real gt over an ignored one at equal overlap.
      if (v > best_iou || (v == best_iou && best >= 0 &&
                           gts[static_cast<std::size_t>(best)].is_ignore && !gts[g].is_ignore)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best_iou >= pos_iou && best_iou > 0) {
      out.gt_index[a] = best;
      out.label[a] = gts[static_cast<std::size_t>(best)].is_ignore ? AnchorLabel::kIgnore
                                                                  : AnchorLabel::kPositive;
    }
  }

  // Forced match: every real gt keeps its best anchor.
  std::vector<char> forced(na, 0);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].is_ignore) continue;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t a = 0; a < na; ++a) {
      if (forced[a]) continue;
      const double v = overlaps[a * gts.size() + g];
      if (v > best_iou) {
        best = static_cast<int>(a);
        best_iou = v;
      }
    }
    if (best < 0) continue;
    forced[static_cast<std::size_t>(best)] = 1;
    out.gt_index[static_cast<std::size_t>(best)] = static_cast<int>(g);
    out.label[static_cast<std::size_t>(best)] = AnchorLabel::kPositive;
  }
  return out;
}

// ---------------------------------------------------------------- head

DetectionHead::DetectionHead(std::span<const int> in_channels, const AnchorSpec& spec, Rng& rng,
                             double init_std) {
  spec.validate();
  RGBT_REQUIRE(in_channels.size() == spec.levels.size(),
               "detection head: one anchor level per pyramid level required");
  for (std::size_t l = 0; l < in_channels.size(); ++l) {
    const int per_cell = spec.anchors_per_cell(static_cast<int>(l));
    per_cell_.push_back(per_cell);
    nn::ConvSpec cs;
    cs.in_channels = in_channels[l];
    cs.out_channels = per_cell * 6;
    cs.kernel = 3;
    cs.stride = 1;
    cs.bias = true;
    convs_.emplace_back("head.level" + std::to_string(l + 1), cs, rng, init_std);
  }
}

HeadOutput DetectionHead::predict(const PyramidFeatures& features, Cache* cache) const {
  RGBT_REQUIRE(features.levels.size() == convs_.size(),
               "detection head expects " + std::to_string(convs_.size()) + " levels, got " +
                   std::to_string(features.levels.size()));
  HeadOutput out;
  out.batch = features.levels[0].batch();
  for (std::size_t l = 0; l < convs_.size(); ++l)
    out.anchors += features.levels[l].plane_size() * per_cell_[l];
  out.loc.assign(static_cast<std::size_t>(out.batch) * out.anchors * 4, 0.0);
  out.logits.assign(static_cast<std::size_t>(out.batch) * out.anchors * 2, 0.0);
  if (cache) {
    cache->convs.assign(convs_.size(), {});
    cache->shapes.clear();
  }

  int offset = 0;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    const Tensor& f = features.levels[l];
    RGBT_REQUIRE(f.batch() == out.batch, "detection head: batch mismatch across levels");
    const Tensor y = convs_[l].forward(f, cache ? &cache->convs[l] : nullptr);
    if (cache) cache->shapes.emplace_back(f.height(), f.width());
    const int plane = y.plane_size();
    const int per_cell = per_cell_[l];
    for (int n = 0; n < out.batch; ++n) {
      for (int p = 0; p < plane; ++p) {
        for (int a = 0; a < per_cell; ++a) {
          const std::size_t idx =
              static_cast<std::size_t>(n) * out.anchors + offset + p * per_cell + a;
          for (int k = 0; k < 4; ++k)
            out.loc[idx * 4 + k] = y.item(n)[static_cast<std::size_t>(a * 6 + k) * plane + p];
          for (int k = 0; k < 2; ++k)
            out.logits[idx * 2 + k] =
                y.item(n)[static_cast<std::size_t>(a * 6 + 4 + k) * plane + p];
        }
      }
    }
    offset += plane * per_cell;
  }
  return out;
}

std::vector<Tensor> DetectionHead::backward(std::span<const double> grad_loc,
                                            std::span<const double> grad_logits,
                                            const Cache& cache) {
  const int batch = cache.convs[0].input.batch();
  int total = 0;
  for (std::size_t l = 0; l < convs_.size(); ++l)
    total += cache.shapes[l].first * cache.shapes[l].second * per_cell_[l];
  std::vector<Tensor> grads;
  int offset = 0;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    const auto [h, w] = cache.shapes[l];
    const int plane = h * w;
    const int per_cell = per_cell_[l];
    Tensor dy(batch, per_cell * 6, h, w);
    for (int n = 0; n < batch; ++n) {
      for (int p = 0; p < plane; ++p) {
        for (int a = 0; a < per_cell; ++a) {
          const std::size_t idx = static_cast<std::size_t>(n) * total + offset + p * per_cell + a;
          for (int k = 0; k < 4; ++k)
            dy.item(n)[static_cast<std::size_t>(a * 6 + k) * plane + p] = grad_loc[idx * 4 + k];
          for (int k = 0; k < 2; ++k)
            dy.item(n)[static_cast<std::size_t>(a * 6 + 4 + k) * plane + p] =
                grad_logits[idx * 2 + k];
        }
      }
    }
    grads.push_back(convs_[l].backward(dy, cache.convs[l]));
    offset += plane * per_cell;
  }
  return grads;
}

void DetectionHead::collect(std::vector<nn::Parameter*>& out) {
  for (auto& c : convs_) c.collect(out);
}

// ---------------------------------------------------------------- decoding

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<Detection> decode_detections(std::span<const double> loc,
                                         std::span<const double> logits,
                                         std::span<const Box> anchors, const BoxOffsets& variance,
                                         int image_h, int image_w, double score_threshold) {
  RGBT_REQUIRE(loc.size() == anchors.size() * 4 && logits.size() == anchors.size() * 2,
               "decode_detections: prediction/anchor count mismatch");
  std::vector<Detection> out;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    Detection d;
    d.score_rgb = sigmoid(logits[a * 2]);
    d.score_thermal = sigmoid(logits[a * 2 + 1]);
    d.confidence = std::max(d.score_rgb, d.score_thermal);
    if (d.confidence < score_threshold) continue;
    d.box = decode_box({loc[a * 4], loc[a * 4 + 1], loc[a * 4 + 2], loc[a * 4 + 3]}, anchors[a],
                       variance, image_w, image_h);
    if (!d.box.valid()) continue;
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh, int top_k) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    if (top_k >= 0 && static_cast<int>(kept.size()) >= top_k) break;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.box, d.box) >= iou_thresh;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

void write_detections_jsonl(std::ostream& os, std::span<const DetectionRecord> records) {
  for (const auto& r : records) {
    nlohmann::json j{{"image_id", r.image_id},
                     {"x", r.det.box.x_min},
                     {"y", r.det.box.y_min},
                     {"w", r.det.box.width()},
                     {"h", r.det.box.height()},
                     {"score", r.det.confidence}};
    os << j.dump() << '\n';
  }
}

std::vector<DetectionRecord> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open detections file");
  std::vector<DetectionRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DetectionRecord r;
      r.image_id = j.at("image_id").get<std::string>();
      const double x = j.at("x"), y = j.at("y"), w = j.at("w"), h = j.at("h");
      r.det.box = {x, y, x + w, y + h};
      r.det.confidence = j.at("score");
      r.det.score_rgb = r.det.score_thermal = r.det.confidence;
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

}  // namespace rgbt
