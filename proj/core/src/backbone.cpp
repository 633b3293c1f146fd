// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/backbone.hpp"

#include <cstring>

#include "rgbt/error.hpp"

namespace rgbt {

BackboneConfig BackboneConfig::default_config() {
  BackboneConfig c;
  c.stages = {{8, 4, 1, 5}, {16, 2, 1, 3}, {32, 2, 1, 3}, {64, 2, 1, 3}};
  c.fusion_channels = {32, 64, 64};
  return c;
}

void BackboneConfig::validate() const {
  RGBT_REQUIRE(stages.size() >= 2, "backbone needs at least two stages");
  RGBT_REQUIRE(ha_insertion_index == 1, "hybrid attention is inserted after the first stage");
  RGBT_REQUIRE(!fusion_channels.empty() && fusion_channels.size() <= stages.size(),
               "fusion levels must be between 1 and the number of stages");
  for (const auto& s : stages) {
    RGBT_REQUIRE(s.out_channels >= 1 && s.depth >= 1 && s.kernel >= 1,
                 "stage channels, depth and kernel must be positive");
    RGBT_REQUIRE(s.stride >= 1 && (s.stride & (s.stride - 1)) == 0,
                 "stage strides must be powers of two");
  }
  for (int c : fusion_channels) RGBT_REQUIRE(c >= 1, "fusion channels must be positive");
  RGBT_REQUIRE(rgb_channels >= 1 && thermal_channels >= 1, "image channels must be positive");
}

int BackboneConfig::cumulative_stride(int stage) const {
  int s = 1;
  for (int i = 0; i <= stage; ++i) s *= stages[static_cast<std::size_t>(i)].stride;
  return s;
}

void BackboneConfig::validate_input(int height, int width) const {
  const int total = cumulative_stride(static_cast<int>(stages.size()) - 1);
  RGBT_REQUIRE(height % total == 0 && width % total == 0,
               "input " + std::to_string(height) + "x" + std::to_string(width) +
                   " is not divisible by the total stride " + std::to_string(total));
}

std::vector<std::pair<int, int>> BackboneConfig::level_shapes(int height, int width) const {
  validate_input(height, width);
  std::vector<std::pair<int, int>> out;
  for (int s = first_fused_stage(); s < static_cast<int>(stages.size()); ++s) {
    const int stride = cumulative_stride(s);
    out.emplace_back(height / stride, width / stride);
  }
  return out;
}

std::vector<int> BackboneConfig::level_strides() const {
  std::vector<int> out;
  for (int s = first_fused_stage(); s < static_cast<int>(stages.size()); ++s)
    out.push_back(cumulative_stride(s));
  return out;
}

// ---------------------------------------------------------------- Stage

Stage::Stage(const std::string& name, int in_channels, const StageSpec& spec, Rng& rng,
             double init_std)
    : in_channels_(in_channels) {
  int in = in_channels;
  for (int d = 0; d < spec.depth; ++d) {
    nn::ConvSpec cs;
    cs.in_channels = in;
    cs.out_channels = spec.out_channels;
    cs.kernel = spec.kernel;
    cs.stride = d == 0 ? spec.stride : 1;
    units_.emplace_back(name + ".unit" + std::to_string(d), cs, rng, init_std);
    in = spec.out_channels;
  }
}

Tensor Stage::forward(const Tensor& x, nn::Mode mode, Cache* cache) {
  RGBT_REQUIRE(x.channels() == in_channels_, "stage expects " + std::to_string(in_channels_) +
                                                 " channels, got " + x.shape_string());
  if (cache) cache->units.assign(units_.size(), {});
  Tensor y = x;
  for (std::size_t i = 0; i < units_.size(); ++i)
    y = units_[i].forward(y, mode, cache ? &cache->units[i] : nullptr);
  return y;
}

Tensor Stage::infer(const Tensor& x) const {
  RGBT_REQUIRE(x.channels() == in_channels_, "stage expects " + std::to_string(in_channels_) +
                                                 " channels, got " + x.shape_string());
  Tensor y = x;
  for (const auto& u : units_) y = u.infer(y);
  return y;
}

Tensor Stage::backward(const Tensor& grad_out, const Cache& cache) {
  Tensor d = grad_out;
  for (std::size_t i = units_.size(); i-- > 0;) d = units_[i].backward(d, cache.units[i]);
  return d;
}

void Stage::collect(std::vector<nn::Parameter*>& out) {
  for (auto& u : units_) u.collect(out);
}

void Stage::collect_buffers(std::vector<nn::Buffer>& out) {
  for (auto& u : units_) u.collect_buffers(out);
}

// ---------------------------------------------------------------- FusionLayer

FusionLayer::FusionLayer(const std::string& name, int channels_per_modality, int out_channels,
                         Rng& rng, double init_std)
    : channels_per_modality_(channels_per_modality), out_channels_(out_channels) {
  nn::ConvSpec cs;
  cs.in_channels = 2 * channels_per_modality;
  cs.out_channels = out_channels;
  cs.kernel = 1;
  cs.stride = 1;
  cs.padding = 0;
  cs.bias = true;
  unit_ = nn::ConvBnRelu(name, cs, rng, init_std);
}

Tensor FusionLayer::forward(const Tensor& f_rgb, const Tensor& f_thermal, nn::Mode mode,
                            nn::ConvBnRelu::Cache* cache) {
  RGBT_REQUIRE(f_rgb.height() == f_thermal.height() && f_rgb.width() == f_thermal.width(),
               "fuse_level: spatial mismatch " + f_rgb.shape_string() + " vs " +
                   f_thermal.shape_string());
  return unit_.forward(Tensor::concat_channels(f_rgb, f_thermal), mode, cache);
}

Tensor FusionLayer::infer(const Tensor& f_rgb, const Tensor& f_thermal) const {
  RGBT_REQUIRE(f_rgb.height() == f_thermal.height() && f_rgb.width() == f_thermal.width(),
               "fuse_level: spatial mismatch " + f_rgb.shape_string() + " vs " +
                   f_thermal.shape_string());
  return unit_.infer(Tensor::concat_channels(f_rgb, f_thermal));
}

std::pair<Tensor, Tensor> FusionLayer::backward(const Tensor& grad_out,
                                                const nn::ConvBnRelu::Cache& cache) {
  const Tensor d = unit_.backward(grad_out, cache);
  const int c = channels_per_modality_;
  Tensor d_rgb(d.batch(), c, d.height(), d.width());
  Tensor d_thermal(d.batch(), c, d.height(), d.width());
  const std::size_t half = static_cast<std::size_t>(c) * d.plane_size();
  for (int n = 0; n < d.batch(); ++n) {
    std::memcpy(d_rgb.item(n), d.item(n), sizeof(double) * half);
    std::memcpy(d_thermal.item(n), d.item(n) + half, sizeof(double) * half);
  }
  return {std::move(d_rgb), std::move(d_thermal)};
}

void FusionLayer::collect(std::vector<nn::Parameter*>& out) { unit_.collect(out); }
void FusionLayer::collect_buffers(std::vector<nn::Buffer>& out) { unit_.collect_buffers(out); }

// ---------------------------------------------------------------- Backbone

Backbone::Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  int in_rgb = config_.rgb_channels;
  int in_thermal = config_.thermal_channels;
  for (std::size_t s = 0; s < config_.stages.size(); ++s) {
    const auto& spec = config_.stages[s];
    rgb_.emplace_back("backbone.rgb.stage" + std::to_string(s + 1), in_rgb, spec, rng,
                      config_.init_std);
    thermal_.emplace_back("backbone.thermal.stage" + std::to_string(s + 1), in_thermal, spec, rng,
                          config_.init_std);
    in_rgb = in_thermal = spec.out_channels;
  }
  for (int l = 0; l < config_.fusion_levels(); ++l) {
    const int stage = config_.first_fused_stage() + l;
    fusion_.emplace_back("fusion.level" + std::to_string(l + 1),
                         config_.stages[static_cast<std::size_t>(stage)].out_channels,
                         config_.fusion_channels[static_cast<std::size_t>(l)], rng,
                         config_.init_std);
  }
  if (config_.hybrid_attention) {
    const int c = config_.stages[0].out_channels;
    const char* names[] = {"ha.rgb.query",     "ha.rgb.key",     "ha.rgb.value",
                           "ha.thermal.query", "ha.thermal.key", "ha.thermal.value"};
    std::normal_distribution<double> dist(0.0, config_.init_std);
    for (const char* name : names) {
      Tensor w(1, 1, c, c);
      for (double& v : w.values()) v = dist(rng);
      ha_.emplace_back(name, std::move(w));
    }
  }
}

attention::HAParams Backbone::ha_params() const {
  RGBT_REQUIRE(ha_.size() == 6, "model has no hybrid attention module");
  const int c = ha_[0].value.height();
  auto load = [c](const nn::Parameter& p) {
    attention::Matrix m(c, c);
    for (int r = 0; r < c; ++r)
      for (int k = 0; k < c; ++k) m(r, k) = p.value.at(0, 0, r, k);
    return m;
  };
  return {{load(ha_[0]), load(ha_[1]), load(ha_[2])}, {load(ha_[3]), load(ha_[4]), load(ha_[5])}};
}

void Backbone::set_ha_params(const attention::HAParams& params) {
  RGBT_REQUIRE(ha_.size() == 6, "model has no hybrid attention module");
  const attention::Matrix* src[] = {&params.rgb.query,     &params.rgb.key,
                                    &params.rgb.value,     &params.thermal.query,
                                    &params.thermal.key,   &params.thermal.value};
  for (std::size_t i = 0; i < 6; ++i) {
    const int c = ha_[i].value.height();
    RGBT_REQUIRE(src[i]->rows() == c && src[i]->cols() == c, "HA parameter shape mismatch");
    for (int r = 0; r < c; ++r)
      for (int k = 0; k < c; ++k) ha_[i].value.at(0, 0, r, k) = (*src[i])(r, k);
  }
}

std::vector<ModalityMask> Backbone::feature_masks(std::span<const ModalityMask> masks, int batch,
                                                  int h, int w) const {
  if (masks.empty()) return {ModalityMask::ones(h, w, MaskResolution::kFeature)};
  RGBT_REQUIRE(masks.size() == 1 || masks.size() == static_cast<std::size_t>(batch),
               "expected one mask per batch item");
  std::vector<ModalityMask> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(attention::downsample_mask(m, h, w));
  return out;
}

PyramidFeatures Backbone::forward(const Tensor& rgb, const Tensor& thermal,
                                  std::span<const ModalityMask> m_rgb,
                                  std::span<const ModalityMask> m_thermal, nn::Mode mode,
                                  Cache* cache) {
  RGBT_REQUIRE(rgb.batch() == thermal.batch() && rgb.height() == thermal.height() &&
                   rgb.width() == thermal.width(),
               "RGB and thermal inputs must be co-registered: " + rgb.shape_string() + " vs " +
                   thermal.shape_string());
  config_.validate_input(rgb.height(), rgb.width());
  const std::size_t stages = config_.stages.size();
  if (cache) {
    cache->rgb.assign(stages, {});
    cache->thermal.assign(stages, {});
    cache->rgb_out.assign(stages, {});
    cache->thermal_out.assign(stages, {});
    cache->fusion.assign(fusion_.size(), {});
  }
  std::vector<Tensor> rgb_out(stages), thermal_out(stages);
  Tensor r = rgb_[0].forward(rgb, mode, cache ? &cache->rgb[0] : nullptr);
  Tensor t = thermal_[0].forward(thermal, mode, cache ? &cache->thermal[0] : nullptr);
  if (config_.hybrid_attention) {
    const auto mr = feature_masks(m_rgb, r.batch(), r.height(), r.width());
    const auto mt = feature_masks(m_thermal, t.batch(), t.height(), t.width());
    auto ha = attention::hybrid_attention(r, t, mr, mt, ha_params(), cache ? &cache->ha : nullptr);
    r = std::move(ha.rgb);
    t = std::move(ha.thermal);
  }
  rgb_out[0] = r;
  thermal_out[0] = t;
  for (std::size_t s = 1; s < stages; ++s) {
    rgb_out[s] = rgb_[s].forward(rgb_out[s - 1], mode, cache ? &cache->rgb[s] : nullptr);
    thermal_out[s] =
        thermal_[s].forward(thermal_out[s - 1], mode, cache ? &cache->thermal[s] : nullptr);
  }
  PyramidFeatures out;
  for (std::size_t l = 0; l < fusion_.size(); ++l) {
    const std::size_t s = static_cast<std::size_t>(config_.first_fused_stage()) + l;
    out.levels.push_back(fusion_[l].forward(rgb_out[s], thermal_out[s], mode,
                                            cache ? &cache->fusion[l] : nullptr));
  }
  if (cache) {
    cache->rgb_out = std::move(rgb_out);
    cache->thermal_out = std::move(thermal_out);
  }
  return out;
}

PyramidFeatures Backbone::infer(const Tensor& rgb, const Tensor& thermal,
                                std::span<const ModalityMask> m_rgb,
                                std::span<const ModalityMask> m_thermal) const {
  RGBT_REQUIRE(rgb.batch() == thermal.batch() && rgb.height() == thermal.height() &&
                   rgb.width() == thermal.width(),
               "RGB and thermal inputs must be co-registered: " + rgb.shape_string() + " vs " +
                   thermal.shape_string());
  config_.validate_input(rgb.height(), rgb.width());
  Tensor r = rgb_[0].infer(rgb);
  Tensor t = thermal_[0].infer(thermal);
  if (config_.hybrid_attention) {
    const auto mr = feature_masks(m_rgb, r.batch(), r.height(), r.width());
    const auto mt = feature_masks(m_thermal, t.batch(), t.height(), t.width());
    auto ha = attention::hybrid_attention(r, t, mr, mt, ha_params());
    r = std::move(ha.rgb);
    t = std::move(ha.thermal);
  }
  PyramidFeatures out;
  const int first = config_.first_fused_stage();
  for (std::size_t s = 0; s < config_.stages.size(); ++s) {
    if (s > 0) {
      r = rgb_[s].infer(r);
      t = thermal_[s].infer(t);
    }
    if (static_cast<int>(s) >= first)
      out.levels.push_back(fusion_[s - static_cast<std::size_t>(first)].infer(r, t));
  }
  return out;
}

void Backbone::backward(const std::vector<Tensor>& level_grads, const Cache& cache) {
  RGBT_REQUIRE(level_grads.size() == fusion_.size(), "backbone backward: level count mismatch");
  const std::size_t stages = config_.stages.size();
  std::vector<Tensor> d_rgb(stages), d_thermal(stages);
  for (std::size_t l = 0; l < fusion_.size(); ++l) {
    const std::size_t s = static_cast<std::size_t>(config_.first_fused_stage()) + l;
    auto [dr, dt] = fusion_[l].backward(level_grads[l], cache.fusion[l]);
    d_rgb[s] = std::move(dr);
    d_thermal[s] = std::move(dt);
  }
  auto accumulate = [](Tensor& acc, Tensor&& g) {
    if (acc.empty()) {
      acc = std::move(g);
    } else {
      acc += g;
    }
  };
  for (std::size_t s = stages; s-- > 1;) {
    if (d_rgb[s].empty()) continue;
    accumulate(d_rgb[s - 1], rgb_[s].backward(d_rgb[s], cache.rgb[s]));
    accumulate(d_thermal[s - 1], thermal_[s].backward(d_thermal[s], cache.thermal[s]));
  }
  Tensor dr = std::move(d_rgb[0]);
  Tensor dt = std::move(d_thermal[0]);
  if (config_.hybrid_attention) {
    const auto g = attention::hybrid_attention_backward(cache.ha, dr, dt, ha_params());
    const attention::Matrix* src[] = {&g.d_params_rgb.query,     &g.d_params_rgb.key,
                                      &g.d_params_rgb.value,     &g.d_params_thermal.query,
                                      &g.d_params_thermal.key,   &g.d_params_thermal.value};
    for (std::size_t i = 0; i < 6; ++i) {
      const int c = ha_[i].grad.height();
      for (int r = 0; r < c; ++r)
        for (int k = 0; k < c; ++k) ha_[i].grad.at(0, 0, r, k) += (*src[i])(r, k);
    }
    dr = g.d_rgb;
    dt = g.d_thermal;
  }
  rgb_[0].backward(dr, cache.rgb[0]);
  thermal_[0].backward(dt, cache.thermal[0]);
}

void Backbone::collect(std::vector<nn::Parameter*>& out) {
  for (auto& s : rgb_) s.collect(out);
  for (auto& s : thermal_) s.collect(out);
  for (auto& p : ha_) out.push_back(&p);
  for (auto& f : fusion_) f.collect(out);
}

void Backbone::collect_buffers(std::vector<nn::Buffer>& out) {
  for (auto& s : rgb_) s.collect_buffers(out);
  for (auto& s : thermal_) s.collect_buffers(out);
  for (auto& f : fusion_) f.collect_buffers(out);
}

}  // namespace rgbt
