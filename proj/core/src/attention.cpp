// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/attention.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "rgbt/error.hpp"

namespace rgbt::attention {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstTokens = Eigen::Map<const RowMat>;
using Tokens = Eigen::Map<RowMat>;

// Rows of the logit matrix processed per block; keeps inference memory at
// O(block * N) for large feature maps.
constexpr int kRowBlock = 256;

ConstTokens tokens(const Tensor& t, int n) {
  return ConstTokens(t.item(n), t.channels(), t.plane_size());
}
Tokens tokens(Tensor& t, int n) { return Tokens(t.item(n), t.channels(), t.plane_size()); }

const ModalityMask& mask_for(std::span<const ModalityMask> masks, int n) {
  return masks.size() == 1 ? masks[0] : masks[static_cast<std::size_t>(n)];
}

void check_masks(const Tensor& f, std::span<const ModalityMask> masks, const char* what) {
  RGBT_REQUIRE(masks.size() == 1 || masks.size() == static_cast<std::size_t>(f.batch()),
               std::string(what) + ": expected 1 or " + std::to_string(f.batch()) +
                   " masks, got " + std::to_string(masks.size()));
  for (const auto& m : masks) {
    RGBT_REQUIRE(m.height() == f.height() && m.width() == f.width(),
                 std::string(what) + ": mask " + std::to_string(m.height()) + "x" +
                     std::to_string(m.width()) + " does not match features " + f.shape_string());
  }
}

void check_projection(const Projection& p, int channels) {
  for (const Matrix* m : {&p.query, &p.key, &p.value}) {
    RGBT_REQUIRE(m->rows() == channels && m->cols() == channels,
                 "projection must be " + std::to_string(channels) + "x" +
                     std::to_string(channels) + ", got " + std::to_string(m->rows()) + "x" +
                     std::to_string(m->cols()));
  }
}

Tensor project(const Tensor& f, const Matrix& w) {
  Tensor out(f.batch(), f.channels(), f.height(), f.width());
  for (int n = 0; n < f.batch(); ++n) tokens(out, n).noalias() = w * tokens(f, n);
  return out;
}

std::vector<ModalityMask> expand(std::span<const ModalityMask> masks, int batch) {
  std::vector<ModalityMask> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int n = 0; n < batch; ++n) out.push_back(mask_for(masks, n));
  return out;
}

}  // namespace

bool Projection::all_finite() const {
  return query.allFinite() && key.allFinite() && value.allFinite();
}

HAParams HAParams::identity(int channels) {
  const Matrix id = Matrix::Identity(channels, channels);
  return {{id, id, id}, {id, id, id}};
}

HAParams HAParams::zeros(int channels) {
  const Matrix z = Matrix::Zero(channels, channels);
  return {{z, z, z}, {z, z, z}};
}

HAParams HAParams::random(int channels, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  auto draw = [&] {
    Matrix m(channels, channels);
    // Fill row-major so the draw order is independent of Eigen's storage.
    for (int r = 0; r < channels; ++r)
      for (int c = 0; c < channels; ++c) m(r, c) = dist(rng);
    return m;
  };
  HAParams p;
  p.rgb.query = draw();
  p.rgb.key = draw();
  p.rgb.value = draw();
  p.thermal.query = draw();
  p.thermal.key = draw();
  p.thermal.value = draw();
  return p;
}

void HAParams::validate() const {
  const int c = channels();
  RGBT_REQUIRE(c >= 1, "attention parameters are empty");
  check_projection(rgb, c);
  check_projection(thermal, c);
  RGBT_REQUIRE(rgb.all_finite() && thermal.all_finite(),
               "attention parameters contain non-finite values");
}

ModalityMask downsample_mask(const ModalityMask& mask, int target_h, int target_w) {
  const int h = mask.height();
  const int w = mask.width();
  RGBT_REQUIRE(target_h >= 1 && target_w >= 1, "downsample_mask: target must be positive");
  RGBT_REQUIRE(target_h <= h && target_w <= w,
               "downsample_mask: target " + std::to_string(target_h) + "x" +
                   std::to_string(target_w) + " exceeds mask " + std::to_string(h) + "x" +
                   std::to_string(w));

  // Work in units where a source pixel spans `target` and an output cell
  // spans `source`; every overlap is then an integer.
  struct Span {
    int first;
    std::vector<std::int64_t> weight;
  };
  auto spans = [](int source, int target) {
    std::vector<Span> out(static_cast<std::size_t>(target));
    for (int o = 0; o < target; ++o) {
      const std::int64_t lo = static_cast<std::int64_t>(o) * source;
      const std::int64_t hi = lo + source;
      const int first = static_cast<int>(lo / target);
      const int last = static_cast<int>((hi - 1) / target);
      Span s{first, {}};
      for (int i = first; i <= last; ++i) {
        const std::int64_t a = std::max<std::int64_t>(lo, static_cast<std::int64_t>(i) * target);
        const std::int64_t b = std::min<std::int64_t>(hi, static_cast<std::int64_t>(i + 1) * target);
        s.weight.push_back(b - a);
      }
      out[static_cast<std::size_t>(o)] = std::move(s);
    }
    return out;
  };
  const auto rows = spans(h, target_h);
  const auto cols = spans(w, target_w);
  const std::int64_t area = static_cast<std::int64_t>(h) * w;

  ModalityMask out(target_h, target_w, 0, MaskResolution::kFeature);
  for (int r = 0; r < target_h; ++r) {
    const Span& rs = rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < target_w; ++c) {
      const Span& cs = cols[static_cast<std::size_t>(c)];
      std::int64_t on = 0;
      for (std::size_t i = 0; i < rs.weight.size(); ++i) {
        const int y = rs.first + static_cast<int>(i);
        for (std::size_t j = 0; j < cs.weight.size(); ++j) {
          if (mask.at(y, cs.first + static_cast<int>(j))) on += rs.weight[i] * cs.weight[j];
        }
      }
      out.set(r, c, 2 * on >= area);
    }
  }
  return out;
}

Tensor apply_mask(const Tensor& features, std::span<const ModalityMask> masks) {
  check_masks(features, masks, "apply_mask");
  Tensor out = features;
  const int plane = features.plane_size();
  for (int n = 0; n < features.batch(); ++n) {
    const auto m = mask_for(masks, n).values();
    double* p = out.item(n);
    for (int c = 0; c < features.channels(); ++c, p += plane) {
      for (int i = 0; i < plane; ++i) {
        if (m[static_cast<std::size_t>(i)] == 0) p[i] = 0.0;
      }
    }
  }
  return out;
}

Tensor apply_mask(const Tensor& features, const ModalityMask& mask) {
  return apply_mask(features, std::span<const ModalityMask>(&mask, 1));
}

QKV project_qkv(const Tensor& features, const Projection& proj) {
  check_projection(proj, features.channels());
  return {project(features, proj.query), project(features, proj.key),
          project(features, proj.value)};
}

Tensor combined_query(const Tensor& q_rgb, const Tensor& q_thermal) {
  RGBT_REQUIRE(q_rgb.same_shape(q_thermal), "combined_query: shape mismatch " +
                                                q_rgb.shape_string() + " vs " +
                                                q_thermal.shape_string());
  Tensor out = q_rgb;
  out += q_thermal;
  return out;
}

Tensor attend(const Tensor& query, const Tensor& key, const Tensor& value,
              std::vector<Matrix>* attention_out) {
  RGBT_REQUIRE(query.same_shape(key) && query.same_shape(value),
               "attend: Q/K/V shapes differ (" + query.shape_string() + ", " +
                   key.shape_string() + ", " + value.shape_string() + ")");
  RGBT_REQUIRE(query.all_finite() && key.all_finite() && value.all_finite(),
               "attend: non-finite input");
  const int n_tokens = query.plane_size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(query.channels()));

  Tensor out(query.batch(), query.channels(), query.height(), query.width());
  if (attention_out) attention_out->assign(static_cast<std::size_t>(query.batch()), Matrix());

  RowMat logits;
  for (int n = 0; n < query.batch(); ++n) {
    const auto q = tokens(query, n);
    const auto k = tokens(key, n);
    const auto v = tokens(value, n);
    auto o = tokens(out, n);
    Matrix* full = nullptr;
    if (attention_out) {
      full = &(*attention_out)[static_cast<std::size_t>(n)];
      full->resize(n_tokens, n_tokens);
    }
    for (int i0 = 0; i0 < n_tokens; i0 += kRowBlock) {
      const int rows = std::min(kRowBlock, n_tokens - i0);
      logits.noalias() = q.middleCols(i0, rows).transpose() * k;
      logits *= scale;
      for (int r = 0; r < rows; ++r) {
        auto row = logits.row(r);
        const double peak = row.maxCoeff();
        row = (row.array() - peak).exp();
        row /= row.sum();
      }
      o.middleCols(i0, rows).noalias() = v * logits.transpose();
      if (full) full->middleRows(i0, rows) = logits;
    }
  }
  return out;
}

HAOutput hybrid_attention(const Tensor& f_rgb, const Tensor& f_thermal,
                          std::span<const ModalityMask> m_rgb,
                          std::span<const ModalityMask> m_thermal, const HAParams& params,
                          HACache* cache) {
  RGBT_REQUIRE(f_rgb.same_shape(f_thermal), "hybrid_attention: feature shapes differ (" +
                                                f_rgb.shape_string() + " vs " +
                                                f_thermal.shape_string() + ")");
  RGBT_REQUIRE(params.channels() == f_rgb.channels(),
               "hybrid_attention: parameters are for " + std::to_string(params.channels()) +
                   " channels, features have " + std::to_string(f_rgb.channels()));
  params.validate();

  Tensor masked_rgb = apply_mask(f_rgb, m_rgb);
  Tensor masked_thermal = apply_mask(f_thermal, m_thermal);
  QKV rgb = project_qkv(masked_rgb, params.rgb);
  QKV thermal = project_qkv(masked_thermal, params.thermal);
  Tensor combined = combined_query(rgb.query, thermal.query);

  std::vector<Matrix>* attn_rgb = cache ? &cache->attn_rgb : nullptr;
  std::vector<Matrix>* attn_thermal = cache ? &cache->attn_thermal : nullptr;
  HAOutput out{attend(combined, rgb.key, rgb.value, attn_rgb),
               attend(combined, thermal.key, thermal.value, attn_thermal)};
  out.rgb += masked_rgb;
  out.thermal += masked_thermal;

  if (cache) {
    cache->mask_rgb = expand(m_rgb, f_rgb.batch());
    cache->mask_thermal = expand(m_thermal, f_rgb.batch());
    cache->masked_rgb = std::move(masked_rgb);
    cache->masked_thermal = std::move(masked_thermal);
    cache->rgb = std::move(rgb);
    cache->thermal = std::move(thermal);
    cache->combined = std::move(combined);
  }
  return out;
}

Tensor self_attention(const Tensor& features, std::span<const ModalityMask> mask,
                      const Projection& proj) {
  const Tensor masked = apply_mask(features, mask);
  const QKV qkv = project_qkv(masked, proj);
  Tensor out = attend(qkv.query, qkv.key, qkv.value);
  out += masked;
  return out;
}

namespace {

// Backward through one attend() call for batch item n. Accumulates into
// d_query and writes d_key / d_value.
void attend_backward(const Matrix& attn, const RowMat& d_out, const ConstTokens& query,
                     const ConstTokens& key, const ConstTokens& value, double scale,
                     RowMat& d_query, RowMat& d_key, RowMat& d_value) {
  // out = V A^T
  d_value.noalias() = d_out * attn;
  Matrix d_attn = d_out.transpose() * value;  // N x N
  // Row-wise softmax Jacobian.
  const Eigen::VectorXd inner = (d_attn.array() * attn.array()).rowwise().sum();
  Matrix d_logits = attn.array() * (d_attn.colwise() - inner).array();
  d_logits *= scale;
  // logits = Q^T K
  d_query.noalias() += key * d_logits.transpose();
  d_key.noalias() = query * d_logits;
}

}  // namespace

HAGrads hybrid_attention_backward(const HACache& cache, const Tensor& grad_rgb,
                                  const Tensor& grad_thermal, const HAParams& params) {
  const Tensor& f_rgb = cache.masked_rgb;
  RGBT_REQUIRE(grad_rgb.same_shape(f_rgb) && grad_thermal.same_shape(f_rgb),
               "hybrid_attention_backward: gradient shape mismatch");
  const int batch = f_rgb.batch();
  const int c = f_rgb.channels();
  const int n_tokens = f_rgb.plane_size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));

  HAGrads g;
  g.d_rgb = Tensor(batch, c, f_rgb.height(), f_rgb.width());
  g.d_thermal = Tensor(batch, c, f_rgb.height(), f_rgb.width());
  for (Projection* p : {&g.d_params_rgb, &g.d_params_thermal}) {
    p->query = Matrix::Zero(c, c);
    p->key = Matrix::Zero(c, c);
    p->value = Matrix::Zero(c, c);
  }

  RowMat d_query(c, n_tokens), d_key_r(c, n_tokens), d_val_r(c, n_tokens), d_key_t(c, n_tokens),
      d_val_t(c, n_tokens), d_f(c, n_tokens);
  for (int n = 0; n < batch; ++n) {
    const auto combined = tokens(cache.combined, n);
    const RowMat go_r = tokens(grad_rgb, n);
    const RowMat go_t = tokens(grad_thermal, n);

    d_query.setZero();
    attend_backward(cache.attn_rgb[static_cast<std::size_t>(n)], go_r, combined,
                    tokens(cache.rgb.key, n), tokens(cache.rgb.value, n), scale, d_query,
                    d_key_r, d_val_r);
    attend_backward(cache.attn_thermal[static_cast<std::size_t>(n)], go_t, combined,
                    tokens(cache.thermal.key, n), tokens(cache.thermal.value, n), scale,
                    d_query, d_key_t, d_val_t);

    // Q_c = Q_rgb + Q_thermal, so both queries receive d_query.
    auto modality = [&](const Tensor& masked, const Projection& w, const RowMat& d_key,
                        const RowMat& d_val, const RowMat& d_out, Projection& dw, Tensor& d_in,
                        const ModalityMask& mask) {
      const auto f = tokens(masked, n);
      dw.query.noalias() += d_query * f.transpose();
      dw.key.noalias() += d_key * f.transpose();
      dw.value.noalias() += d_val * f.transpose();
      d_f = d_out;  // residual branch
      d_f.noalias() += w.query.transpose() * d_query;
      d_f.noalias() += w.key.transpose() * d_key;
      d_f.noalias() += w.value.transpose() * d_val;
      auto dst = tokens(d_in, n);
      const auto m = mask.values();
      for (int i = 0; i < n_tokens; ++i) {
        if (m[static_cast<std::size_t>(i)]) {
          dst.col(i) = d_f.col(i);
        } else {
          dst.col(i).setZero();
        }
      }
    };
    modality(cache.masked_rgb, params.rgb, d_key_r, d_val_r, go_r, g.d_params_rgb, g.d_rgb,
             cache.mask_rgb[static_cast<std::size_t>(n)]);
    modality(cache.masked_thermal, params.thermal, d_key_t, d_val_t, go_t, g.d_params_thermal,
             g.d_thermal, cache.mask_thermal[static_cast<std::size_t>(n)]);
  }
  return g;
}

}  // namespace rgbt::attention
