// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used by the unit and acceptance
// tests. They favour explicit loops over speed and share no code with the
// library beyond its data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rgbt/attention.hpp"
#include "rgbt/detection.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt::testing {

inline Tensor random_tensor(int n, int c, int h, int w, Rng& rng, double stddev = 1.0) {
  Tensor t(n, c, h, w);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline ModalityMask random_mask(int h, int w, Rng& rng, double p_one = 0.6,
                                MaskResolution res = MaskResolution::kFeature) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(h) * w);
  for (auto& x : v) x = bernoulli(rng, p_one) ? 1 : 0;
  return ModalityMask(h, w, std::move(v), res);
}

/// Hybrid attention for one modality pair, token by token.
struct OracleOutput {
  Tensor rgb, thermal;
};

inline OracleOutput hybrid_attention_oracle(const Tensor& f_rgb, const Tensor& f_thermal,
                                            const std::vector<ModalityMask>& m_rgb,
                                            const std::vector<ModalityMask>& m_thermal,
                                            const attention::HAParams& p) {
  const int batch = f_rgb.batch(), c = f_rgb.channels(), h = f_rgb.height(), w = f_rgb.width();
  const int n_tok = h * w;
  OracleOutput out{Tensor(batch, c, h, w), Tensor(batch, c, h, w)};
  for (int b = 0; b < batch; ++b) {
    const ModalityMask& mr = m_rgb.size() == 1 ? m_rgb[0] : m_rgb[static_cast<std::size_t>(b)];
    const ModalityMask& mt =
        m_thermal.size() == 1 ? m_thermal[0] : m_thermal[static_cast<std::size_t>(b)];
    // tokens[modality][token][channel]
    std::vector<std::vector<double>> f[2], q[2], k[2], v[2];
    for (int m = 0; m < 2; ++m) {
      const Tensor& src = m == 0 ? f_rgb : f_thermal;
      const ModalityMask& mask = m == 0 ? mr : mt;
      const attention::Projection& proj = m == 0 ? p.rgb : p.thermal;
      for (int i = 0; i < n_tok; ++i) {
        const int y = i / w, x = i % w;
        std::vector<double> tok(static_cast<std::size_t>(c));
        for (int ch = 0; ch < c; ++ch) tok[ch] = mask.at(y, x) * src.at(b, ch, y, x);
        std::vector<double> tq(c, 0.0), tk(c, 0.0), tv(c, 0.0);
        for (int r = 0; r < c; ++r)
          for (int s = 0; s < c; ++s) {
            tq[r] += proj.query(r, s) * tok[s];
            tk[r] += proj.key(r, s) * tok[s];
            tv[r] += proj.value(r, s) * tok[s];
          }
        f[m].push_back(tok);
        q[m].push_back(tq);
        k[m].push_back(tk);
        v[m].push_back(tv);
      }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    for (int m = 0; m < 2; ++m) {
      Tensor& dst = m == 0 ? out.rgb : out.thermal;
      for (int i = 0; i < n_tok; ++i) {
        std::vector<double> logits(static_cast<std::size_t>(n_tok));
        for (int j = 0; j < n_tok; ++j) {
          double s = 0.0;
          for (int ch = 0; ch < c; ++ch) s += (q[0][i][ch] + q[1][i][ch]) * k[m][j][ch];
          logits[j] = s * scale;
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& l : logits) z += (l = std::exp(l - mx));
        const int y = i / w, x = i % w;
        for (int ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (int j = 0; j < n_tok; ++j) acc += logits[j] / z * v[m][j][ch];
          dst.at(b, ch, y, x) = f[m][i][ch] + acc;
        }
      }
    }
  }
  return out;
}

/// Central finite difference of a scalar function over every entry of `x`.
inline std::vector<double> numeric_gradient(std::span<double> x,
                                            const std::function<double()>& f,
                                            double step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = f();
    x[i] = orig - step;
    const double down = f();
    x[i] = orig;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

/// Largest elementwise relative error, with `floor` guarding tiny magnitudes.
inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

/// Greedy NMS written from the definition: repeatedly take the best remaining
/// detection and drop everything overlapping it.
inline std::vector<Detection> nms_oracle(std::vector<Detection> dets, double thresh, int top_k) {
  std::vector<Detection> kept;
  std::vector<bool> alive(dets.size(), true);
  while (static_cast<int>(kept.size()) < top_k) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && (best < 0 || dets[i].confidence > dets[static_cast<std::size_t>(best)].confidence))
        best = static_cast<int>(i);
    if (best < 0) break;
    const Detection d = dets[static_cast<std::size_t>(best)];
    kept.push_back(d);
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && iou(dets[i].box, d.box) >= thresh) alive[i] = false;
    alive[static_cast<std::size_t>(best)] = false;
  }
  return kept;
}

}  // namespace rgbt::testing
