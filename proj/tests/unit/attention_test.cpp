// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/attention.hpp"

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "rgbt/error.hpp"

namespace rgbt::attention {
namespace {

using testing::random_mask;
using testing::random_tensor;

constexpr auto kFeat = MaskResolution::kFeature;

TEST(DownsampleMask, ConstantMapsStayConstant) {
  EXPECT_TRUE(downsample_mask(ModalityMask::ones(512, 640), 64, 80).all_ones());
  EXPECT_TRUE(downsample_mask(ModalityMask::zeros(512, 640), 64, 80).all_zeros());
  EXPECT_TRUE(downsample_mask(ModalityMask::zeros(30, 17), 7, 5).all_zeros());
}

TEST(DownsampleMask, LeftThirdBoundaryMatchesAreaAverage) {
  ModalityMask m = ModalityMask::ones(512, 640);
  m.fill_rect(0, 512, 0, 213, false);
  const ModalityMask d = downsample_mask(m, 64, 80);
  EXPECT_EQ(d.resolution(), kFeat);
  for (int x = 0; x < 80; ++x) {
    // Each output column covers source columns [8x, 8x + 8); count the ones.
    int ones = 0;
    for (int sx = 8 * x; sx < 8 * x + 8; ++sx) ones += sx >= 213 ? 1 : 0;
    const int expected = 2 * ones >= 8 ? 1 : 0;
    for (int y = 0; y < 64; ++y) ASSERT_EQ(d.at(y, x), expected) << "column " << x;
  }
  EXPECT_EQ(d.at(0, 26), 0);
  EXPECT_EQ(d.at(0, 27), 1);
}

TEST(DownsampleMask, NonIntegerRatioUsesFractionalCoverage) {
  // 3 source columns onto 2 targets: target 0 covers [0, 1.5), target 1 [1.5, 3).
  const ModalityMask m(1, 3, std::vector<std::uint8_t>{0, 1, 1});
  const ModalityMask d = downsample_mask(m, 1, 2);
  EXPECT_EQ(d.at(0, 0), 0);  // (0 * 1 + 1 * 0.5) / 1.5 = 1/3
  EXPECT_EQ(d.at(0, 1), 1);  // (1 * 0.5 + 1 * 1) / 1.5 = 1
}

TEST(DownsampleMask, TieRoundsToOne) {
  const ModalityMask m(1, 2, std::vector<std::uint8_t>{0, 1});
  EXPECT_EQ(downsample_mask(m, 1, 1).at(0, 0), 1);
}

TEST(DownsampleMask, RejectsUpsampling) {
  EXPECT_THROW(downsample_mask(ModalityMask::ones(4, 4), 8, 4), ValidationError);
}

TEST(ModalityMaskTest, RejectsNonBinaryValues) {
  EXPECT_THROW(ModalityMask(1, 2, std::vector<std::uint8_t>{0, 2}), ValidationError);
}

TEST(ApplyMask, IdentityAndAnnihilation) {
  Rng rng(1);
  const Tensor f = random_tensor(2, 3, 4, 5, rng);
  const Tensor same = apply_mask(f, ModalityMask::ones(4, 5, kFeat));
  EXPECT_EQ(same.values().size(), f.values().size());
  EXPECT_TRUE(std::equal(same.values().begin(), same.values().end(), f.values().begin()));
  const Tensor zero = apply_mask(f, ModalityMask::zeros(4, 5, kFeat));
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyMask, SingleCell) {
  Tensor f(1, 2, 2, 2, 1.0);
  f.at(0, 0, 0, 0) = 2.5;
  ModalityMask m = ModalityMask::ones(2, 2, kFeat);
  m.set(0, 0, false);
  const Tensor out = apply_mask(f, m);
  EXPECT_EQ(out.at(0, 0, 0, 0), 0.0);
  EXPECT_EQ(out.at(0, 1, 0, 0), 0.0);
  EXPECT_EQ(out.at(0, 0, 1, 1), 1.0);
}

TEST(ApplyMask, DimensionMismatchThrows) {
  EXPECT_THROW(apply_mask(Tensor(1, 1, 3, 3), ModalityMask::ones(3, 4, kFeat)), ValidationError);
}

TEST(ProjectQkv, ZeroInputAndIdentity) {
  Rng rng(2);
  const auto p = HAParams::random(3, rng, 1.0);
  const QKV z = project_qkv(Tensor(1, 3, 2, 2), p.rgb);
  for (const Tensor* t : {&z.query, &z.key, &z.value})
    for (double v : t->values()) EXPECT_EQ(v, 0.0);

  const Tensor f = random_tensor(1, 3, 2, 2, rng);
  const QKV id = project_qkv(f, HAParams::identity(3).rgb);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(id.query.values()[i], f.values()[i]);
}

TEST(ProjectQkv, HandComputedSwap) {
  Projection p{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  p.query << 0, 1, 1, 0;
  Tensor f(1, 2, 1, 1);
  f.at(0, 0, 0, 0) = 1;
  f.at(0, 1, 0, 0) = 2;
  const QKV out = project_qkv(f, p);
  EXPECT_EQ(out.query.at(0, 0, 0, 0), 2);
  EXPECT_EQ(out.query.at(0, 1, 0, 0), 1);
}

TEST(ProjectQkv, ChannelMismatchThrows) {
  EXPECT_THROW(project_qkv(Tensor(1, 3, 2, 2), HAParams::identity(2).rgb), ValidationError);
}

TEST(CombinedQuery, SumsElementwise) {
  Tensor a(1, 2, 1, 1), b(1, 2, 1, 1);
  a.at(0, 0, 0, 0) = 1;
  a.at(0, 1, 0, 0) = 1;
  b.at(0, 0, 0, 0) = 2;
  b.at(0, 1, 0, 0) = -1;
  const Tensor c = combined_query(a, b);
  EXPECT_EQ(c.at(0, 0, 0, 0), 3);
  EXPECT_EQ(c.at(0, 1, 0, 0), 0);

  Rng rng(3);
  const Tensor q = random_tensor(1, 2, 3, 3, rng);
  const Tensor same = combined_query(q, Tensor(1, 2, 3, 3));
  EXPECT_TRUE(std::equal(same.values().begin(), same.values().end(), q.values().begin()));
  Tensor neg = q;
  for (double& v : neg.values()) v = -v;
  const Tensor cancelled = combined_query(q, neg);
  for (double v : cancelled.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(combined_query(q, Tensor(1, 2, 3, 2)), ValidationError);
}

TEST(Attend, ZeroValuesGiveZero) {
  Rng rng(4);
  const Tensor q = random_tensor(1, 2, 3, 3, rng), k = random_tensor(1, 2, 3, 3, rng);
  const Tensor out = attend(q, k, Tensor(1, 2, 3, 3));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Attend, SingleTokenReturnsValue) {
  Rng rng(5);
  const Tensor q = random_tensor(1, 4, 1, 1, rng), k = random_tensor(1, 4, 1, 1, rng);
  const Tensor v = random_tensor(1, 4, 1, 1, rng);
  const Tensor out = attend(q, k, v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(out.values()[i], v.values()[i]);
}

TEST(Attend, ZeroLogitsAverageValues) {
  Tensor q(1, 1, 1, 2), k(1, 1, 1, 2), v(1, 1, 1, 2);
  k.at(0, 0, 0, 0) = 3;
  k.at(0, 0, 0, 1) = -7;
  v.at(0, 0, 0, 0) = 1;
  v.at(0, 0, 0, 1) = 4;
  const Tensor out = attend(q, k, v);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0, 0), 2.5);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0, 1), 2.5);
}

TEST(Attend, NonFiniteInputThrows) {
  Tensor q(1, 1, 1, 2), k(1, 1, 1, 2), v(1, 1, 1, 2);
  q.at(0, 0, 0, 1) = std::nan("");
  EXPECT_THROW(attend(q, k, v), ValidationError);
}

TEST(Attend, RowsSumToOne) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor q = random_tensor(2, 3, 4, 5, rng, 3.0), k = random_tensor(2, 3, 4, 5, rng, 3.0);
    std::vector<Matrix> attn;
    attend(q, k, random_tensor(2, 3, 4, 5, rng), &attn);
    ASSERT_EQ(attn.size(), 2u);
    for (const auto& a : attn) {
      const Eigen::VectorXd sums = a.rowwise().sum();
      for (int i = 0; i < sums.size(); ++i) EXPECT_NEAR(sums(i), 1.0, 1e-6);
    }
  }
}

TEST(Attend, LargeTokenCountCrossesRowBlocks) {
  // More tokens than one row block: compare against a direct dense product.
  Rng rng(7);
  const Tensor q = random_tensor(1, 2, 20, 30, rng), k = random_tensor(1, 2, 20, 30, rng);
  const Tensor v = random_tensor(1, 2, 20, 30, rng);
  const Tensor out = attend(q, k, v);
  const int n = 600;
  Matrix Q(2, n), K(2, n), V(2, n);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < n; ++i) {
      Q(c, i) = q.values()[c * n + i];
      K(c, i) = k.values()[c * n + i];
      V(c, i) = v.values()[c * n + i];
    }
  Matrix s = (Q.transpose() * K) / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    s.row(i).array() -= s.row(i).maxCoeff();
    s.row(i) = s.row(i).array().exp();
    s.row(i) /= s.row(i).sum();
  }
  const Matrix ref = V * s.transpose();
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < n; ++i) ASSERT_NEAR(out.values()[c * n + i], ref(c, i), 1e-10);
}

TEST(HybridAttention, TotalBlackoutGivesZero) {
  Rng rng(8);
  const Tensor fr = random_tensor(1, 4, 3, 3, rng), ft = random_tensor(1, 4, 3, 3, rng);
  const ModalityMask z[] = {ModalityMask::zeros(3, 3, kFeat)};
  const auto out = hybrid_attention(fr, ft, z, z, HAParams::random(4, rng, 0.5));
  for (double v : out.rgb.values()) EXPECT_EQ(v, 0.0);
  for (double v : out.thermal.values()) EXPECT_EQ(v, 0.0);
}

TEST(HybridAttention, CollapsesToSelfAttentionBitwise) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor fr = random_tensor(2, 5, 3, 4, rng), ft = random_tensor(2, 5, 3, 4, rng);
    const auto p = HAParams::random(5, rng, 0.7);
    const std::vector<ModalityMask> zero{ModalityMask::zeros(3, 4, kFeat)};
    const std::vector<ModalityMask> mt{random_mask(3, 4, rng), random_mask(3, 4, rng)};
    const auto out = hybrid_attention(fr, ft, zero, mt, p);
    const Tensor ref = self_attention(ft, mt, p.thermal);
    ASSERT_EQ(std::memcmp(out.thermal.data(), ref.data(), ref.size() * sizeof(double)), 0);

    const auto out2 = hybrid_attention(fr, ft, mt, zero, p);
    const Tensor ref2 = self_attention(fr, mt, p.rgb);
    ASSERT_EQ(std::memcmp(out2.rgb.data(), ref2.data(), ref2.size() * sizeof(double)), 0);
  }
}

TEST(HybridAttention, MatchesLoopOracle) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = uniform_int(rng, 1, 6), h = uniform_int(rng, 1, 3), w = uniform_int(rng, 1, 4);
    const int b = uniform_int(rng, 1, 2);
    const Tensor fr = random_tensor(b, c, h, w, rng), ft = random_tensor(b, c, h, w, rng);
    const auto p = HAParams::random(c, rng, 0.8);
    std::vector<ModalityMask> mr, mt;
    for (int i = 0; i < b; ++i) {
      mr.push_back(random_mask(h, w, rng));
      mt.push_back(random_mask(h, w, rng));
    }
    const auto out = hybrid_attention(fr, ft, mr, mt, p);
    const auto ref = testing::hybrid_attention_oracle(fr, ft, mr, mt, p);
    for (std::size_t i = 0; i < ref.rgb.size(); ++i) {
      ASSERT_NEAR(out.rgb.values()[i], ref.rgb.values()[i], 1e-9);
      ASSERT_NEAR(out.thermal.values()[i], ref.thermal.values()[i], 1e-9);
    }
  }
}

TEST(HybridAttention, MaskedPositionsHaveZeroKeysAndValues) {
  Rng rng(11);
  const Tensor fr = random_tensor(1, 3, 4, 4, rng), ft = random_tensor(1, 3, 4, 4, rng);
  const std::vector<ModalityMask> mr{random_mask(4, 4, rng)}, mt{random_mask(4, 4, rng)};
  HACache cache;
  hybrid_attention(fr, ft, mr, mt, HAParams::random(3, rng, 1.0), &cache);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        if (!mr[0].at(y, x)) {
          EXPECT_EQ(cache.rgb.key.at(0, ch, y, x), 0.0);
          EXPECT_EQ(cache.rgb.value.at(0, ch, y, x), 0.0);
        }
        if (!mt[0].at(y, x)) {
          EXPECT_EQ(cache.thermal.key.at(0, ch, y, x), 0.0);
          EXPECT_EQ(cache.thermal.value.at(0, ch, y, x), 0.0);
        }
      }
}

TEST(HybridAttention, PermutationEquivariant) {
  Rng rng(12);
  const int c = 3, h = 1, w = 7;
  const Tensor fr = random_tensor(1, c, h, w, rng), ft = random_tensor(1, c, h, w, rng);
  const std::vector<ModalityMask> mr{random_mask(h, w, rng)}, mt{random_mask(h, w, rng)};
  const auto p = HAParams::random(c, rng, 0.6);
  std::vector<int> perm(w);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto permute = [&](const Tensor& t) {
    Tensor o(1, c, h, w);
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < w; ++i) o.at(0, ch, 0, i) = t.at(0, ch, 0, perm[i]);
    return o;
  };
  auto permute_mask = [&](const ModalityMask& m) {
    ModalityMask o(h, w, 1, kFeat);
    for (int i = 0; i < w; ++i) o.set(0, i, m.at(0, perm[i]));
    return o;
  };
  const auto out = hybrid_attention(fr, ft, mr, mt, p);
  const std::vector<ModalityMask> pmr{permute_mask(mr[0])}, pmt{permute_mask(mt[0])};
  const auto pout = hybrid_attention(permute(fr), permute(ft), pmr, pmt, p);
  const Tensor expect_r = permute(out.rgb), expect_t = permute(out.thermal);
  for (std::size_t i = 0; i < expect_r.size(); ++i) {
    EXPECT_NEAR(pout.rgb.values()[i], expect_r.values()[i], 1e-12);
    EXPECT_NEAR(pout.thermal.values()[i], expect_t.values()[i], 1e-12);
  }
}

TEST(HybridAttention, BatchItemsAreIndependent) {
  Rng rng(13);
  const Tensor fr = random_tensor(3, 2, 3, 3, rng), ft = random_tensor(3, 2, 3, 3, rng);
  std::vector<ModalityMask> mr, mt;
  for (int i = 0; i < 3; ++i) {
    mr.push_back(random_mask(3, 3, rng));
    mt.push_back(random_mask(3, 3, rng));
  }
  const auto p = HAParams::random(2, rng, 0.5);
  const auto batched = hybrid_attention(fr, ft, mr, mt, p);
  for (int n = 0; n < 3; ++n) {
    const std::vector<ModalityMask> r{mr[n]}, t{mt[n]};
    const auto single = hybrid_attention(fr.slice(n), ft.slice(n), r, t, p);
    for (std::size_t i = 0; i < single.rgb.size(); ++i) {
      EXPECT_EQ(single.rgb.values()[i], batched.rgb.slice(n).values()[i]);
      EXPECT_EQ(single.thermal.values()[i], batched.thermal.slice(n).values()[i]);
    }
  }
}

class HybridAttentionGradient : public ::testing::TestWithParam<int> {};

TEST_P(HybridAttentionGradient, MatchesFiniteDifferences) {
  Rng rng(100 + GetParam());
  const int c = 3, h = 3, w = 3;
  Tensor fr = random_tensor(2, c, h, w, rng), ft = random_tensor(2, c, h, w, rng);
  const std::vector<ModalityMask> mr{random_mask(h, w, rng, 0.7), ModalityMask::ones(h, w, kFeat)};
  const std::vector<ModalityMask> mt{random_mask(h, w, rng, 0.7), random_mask(h, w, rng, 0.5)};
  HAParams p = HAParams::random(c, rng, 0.6);
  const Tensor gr = random_tensor(2, c, h, w, rng), gt = random_tensor(2, c, h, w, rng);

  auto loss = [&] {
    const auto out = hybrid_attention(fr, ft, mr, mt, p);
    return testing::dot(out.rgb, gr) + testing::dot(out.thermal, gt);
  };
  HACache cache;
  hybrid_attention(fr, ft, mr, mt, p, &cache);
  const HAGrads g = hybrid_attention_backward(cache, gr, gt, p);

  auto check = [&](std::span<double> x, std::span<const double> analytic, const char* what) {
    const auto numeric = testing::numeric_gradient(x, loss);
    EXPECT_LT(testing::max_relative_error(analytic, numeric), 1e-4) << what;
  };
  check(fr.values(), g.d_rgb.values(), "d_rgb");
  check(ft.values(), g.d_thermal.values(), "d_thermal");
  auto as_span = [](Matrix& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  auto as_cspan = [](const Matrix& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  check(as_span(p.rgb.query), as_cspan(g.d_params_rgb.query), "rgb.query");
  check(as_span(p.rgb.key), as_cspan(g.d_params_rgb.key), "rgb.key");
  check(as_span(p.rgb.value), as_cspan(g.d_params_rgb.value), "rgb.value");
  check(as_span(p.thermal.query), as_cspan(g.d_params_thermal.query), "thermal.query");
  check(as_span(p.thermal.key), as_cspan(g.d_params_thermal.key), "thermal.key");
  check(as_span(p.thermal.value), as_cspan(g.d_params_thermal.value), "thermal.value");
}

INSTANTIATE_TEST_SUITE_P(Seeds, HybridAttentionGradient, ::testing::Range(0, 5));

}  // namespace
}  // namespace rgbt::attention
