// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "rgbt/attention.hpp"
#include "rgbt/layers.hpp"
#include "rgbt/model.hpp"

namespace {

rgbt::Tensor random_tensor(int n, int c, int h, int w, rgbt::Rng& rng) {
  rgbt::Tensor t(n, c, h, w);
  std::normal_distribution<double> dist;
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void BM_HybridAttention(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int c = 8;
  rgbt::Rng rng(1);
  const auto f_rgb = random_tensor(1, c, side, side, rng);
  const auto f_thermal = random_tensor(1, c, side, side, rng);
  const auto params = rgbt::attention::HAParams::random(c, rng, 0.3);
  const rgbt::ModalityMask ones[] = {
      rgbt::ModalityMask::ones(side, side, rgbt::MaskResolution::kFeature)};
  for (auto _ : state) {
    auto out = rgbt::attention::hybrid_attention(f_rgb, f_thermal, ones, ones, params);
    benchmark::DoNotOptimize(out.rgb.data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_HybridAttention)->Arg(8)->Arg(16)->Arg(32);

void BM_Conv3x3(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  rgbt::Rng rng(2);
  rgbt::nn::Conv2d conv("bench", {16, 32, 3, 1, -1, false}, rng);
  const auto x = random_tensor(1, 16, side, side, rng);
  for (auto _ : state) {
    auto y = conv.forward(x);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Arg(64);

void BM_ModelTrainStep(benchmark::State& state) {
  rgbt::ModelConfig cfg;
  rgbt::Model model(cfg, 3);
  rgbt::Rng rng(3);
  const int batch = static_cast<int>(state.range(0));
  const auto rgb = random_tensor(batch, 3, cfg.image_height, cfg.image_width, rng);
  const auto thermal = random_tensor(batch, 1, cfg.image_height, cfg.image_width, rng);
  for (auto _ : state) {
    rgbt::Model::Cache cache;
    auto out = model.forward(rgb, thermal, {}, {}, rgbt::nn::Mode::kTrain, &cache);
    std::vector<double> gl(out.loc.size(), 1e-3), gc(out.logits.size(), 1e-3);
    model.zero_grad();
    model.backward(gl, gc, cache);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ModelTrainStep)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ModelInference(benchmark::State& state) {
  rgbt::ModelConfig cfg;
  const rgbt::Model model(cfg, 4);
  rgbt::Rng rng(4);
  const auto rgb = random_tensor(16, 3, cfg.image_height, cfg.image_width, rng);
  const auto thermal = random_tensor(16, 1, cfg.image_height, cfg.image_width, rng);
  for (auto _ : state) {
    auto dets = model.detect(rgb, thermal, {}, {});
    benchmark::DoNotOptimize(dets.data());
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ModelInference)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
