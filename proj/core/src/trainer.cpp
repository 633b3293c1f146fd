// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rgbt/augmentation.hpp"
#include "rgbt/checkpoint.hpp"
#include "rgbt/error.hpp"

namespace rgbt {

double learning_rate(const TrainConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int e : cfg.lr_decay_epochs)
    if (epoch >= e) lr *= cfg.lr_gamma;
  return lr;
}

namespace {

struct Snapshot {
  std::vector<Tensor> values;
};

Snapshot snapshot(Model& model) {
  Snapshot s;
  for (auto* p : model.parameters()) s.values.push_back(p->value);
  for (auto& b : model.buffers()) s.values.push_back(*b.value);
  return s;
}

void restore(Model& model, const Snapshot& s) {
  std::size_t i = 0;
  for (auto* p : model.parameters()) p->value = s.values[i++];
  for (auto& b : model.buffers()) *b.value = s.values[i++];
}

struct Sample {
  ScenePair pair;
  ModalityMask m_rgb, m_thermal;
};

Sample prepare_sample(const ScenePair& scene, const ExperimentConfig& cfg, int epoch, int index) {
  Rng rng(derive_seed(cfg.train.seed, static_cast<std::uint64_t>(epoch) + 1,
                      static_cast<std::uint64_t>(index)));
  Sample s{scene, {}, {}};
  apply_baseline_augmentation(s.pair, rng, cfg.augmentation);
  if (cfg.train.masking_augmentation) {
    auto masks = sample_training_masks(rng, cfg.augmentation, scene.height(), scene.width());
    s.pair = apply_masks(s.pair, masks.rgb, masks.thermal);
    s.m_rgb = std::move(masks.rgb);
    s.m_thermal = std::move(masks.thermal);
  } else {
    s.m_rgb = ModalityMask::ones(scene.height(), scene.width());
    s.m_thermal = ModalityMask::ones(scene.height(), scene.width());
  }
  return s;
}

void sgd_step(Model& model, const TrainConfig& cfg, double lr) {
  auto params = model.parameters();
  double scale = 1.0;
  if (cfg.grad_clip > 0) {
    double sq = 0.0;
    for (auto* p : params)
      for (double g : p->grad.values()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > cfg.grad_clip) scale = cfg.grad_clip / norm;
  }
  for (auto* p : params) {
    if (p->velocity.empty()) p->velocity = Tensor(p->value.batch(), p->value.channels(),
                                                  p->value.height(), p->value.width());
    auto w = p->value.values();
    auto g = p->grad.values();
    auto v = p->velocity.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = cfg.momentum * v[i] + scale * g[i] + cfg.weight_decay * w[i];
      w[i] -= lr * v[i];
    }
  }
}

}  // namespace

TrainResult train(Model& model, std::span<const ScenePair> scenes, const ExperimentConfig& cfg,
                  const TrainOptions& options) {
  cfg.train.validate();
  RGBT_REQUIRE(!scenes.empty(), "training set is empty");
  const auto& tc = cfg.train;
  const int n_val = static_cast<int>(std::floor(tc.validation_fraction * scenes.size()));
  const int n_train = static_cast<int>(scenes.size()) - n_val;
  RGBT_REQUIRE(n_train >= 1, "no training scenes left after the validation split");
  const auto train_set = scenes.first(static_cast<std::size_t>(n_train));
  const auto val_set = scenes.subspan(static_cast<std::size_t>(n_train));

  TrainResult result;
  Snapshot best;
  double best_mr = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int step = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = learning_rate(tc, epoch);
    std::vector<int> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(tc.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (int start = 0; start < n_train; start += tc.batch_size) {
      const int end = std::min(n_train, start + tc.batch_size);
      std::vector<Sample> batch;
      for (int i = start; i < end; ++i) {
        const int idx = order[static_cast<std::size_t>(i)];
        batch.push_back(prepare_sample(train_set[static_cast<std::size_t>(idx)], cfg, epoch, idx));
      }
      std::vector<const ScenePair*> pairs;
      std::vector<ModalityMask> m_rgb, m_thermal;
      std::vector<AnchorTargets> targets;
      for (const auto& s : batch) {
        pairs.push_back(&s.pair);
        m_rgb.push_back(s.m_rgb);
        m_thermal.push_back(s.m_thermal);
        targets.push_back(build_targets(model.anchors(), s.pair.gts, &s.m_rgb, &s.m_thermal,
                                        model.config().variance, model.config().pos_iou,
                                        model.config().blackout_label));
      }
      const auto [rgb, thermal] = to_tensors(pairs);
      Model::Cache cache;
      const HeadOutput out = model.forward(rgb, thermal, m_rgb, m_thermal, nn::Mode::kTrain, &cache);
      std::vector<double> grad_loc, grad_logits;
      const LossBreakdown loss = batch_loss(out, targets, tc.lambda, &grad_loc, &grad_logits);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", step " << step << " (lr " << lr
            << "): loss bbox=" << loss.l_bbox << " multilabel=" << loss.l_multilabel;
        throw DivergenceError(msg.str());
      }
      model.zero_grad();
      model.backward(grad_loc, grad_logits, cache);
      sgd_step(model, tc, lr);
      result.history.push_back({epoch, step, lr, loss});
      epoch_loss += loss.total;
      ++epoch_steps;
      ++step;
    }
    result.epochs_run = epoch + 1;

    double val_mr = std::numeric_limits<double>::quiet_NaN();
    if (!val_set.empty()) {
      model.round_to_float32();
      const Scenario dual[] = {Scenario::kDual};
      const MRTable table = evaluate_scenarios(model, val_set, dual, cfg.eval);
      const SplitResult* r = table.find(Scenario::kDual, EvalSplit::kAll);
      val_mr = r && r->defined ? r->mr : 100.0;
      result.validation_mr.push_back(val_mr);
      if (val_mr < best_mr) {
        best_mr = val_mr;
        best = snapshot(model);
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= tc.early_stop_patience) {
        if (options.on_epoch) options.on_epoch(epoch, epoch_loss / epoch_steps, val_mr);
        break;
      }
    }
    if (options.on_epoch) options.on_epoch(epoch, epoch_loss / std::max(epoch_steps, 1), val_mr);
  }
  if (result.best_epoch >= 0) {
    restore(model, best);
  } else {
    result.best_epoch = result.epochs_run - 1;
  }
  model.round_to_float32();
  return result;
}

void write_loss_history_csv(std::ostream& os, std::span<const LossRecord> history) {
  os << "step,epoch,lr,l_bbox,l_multilabel,lambda,total\n";
  os.precision(10);
  for (const auto& r : history) {
    os << r.step << ',' << r.epoch << ',' << r.lr << ',' << r.loss.l_bbox << ','
       << r.loss.l_multilabel << ',' << r.loss.lambda << ',' << r.loss.total << '\n';
  }
}

std::vector<EvalImage> run_inference(const Model& model, std::span<const ScenePair> scenes,
                                     Scenario scenario, int batch_size) {
  RGBT_REQUIRE(batch_size >= 1, "batch_size must be positive");
  std::vector<EvalImage> images;
  for (std::size_t start = 0; start < scenes.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(scenes.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<ScenarioResult> applied;
    for (std::size_t i = start; i < end; ++i) applied.push_back(apply_scenario(scenes[i], scenario));
    std::vector<const ScenePair*> pairs;
    std::vector<ModalityMask> m_rgb, m_thermal;
    for (const auto& a : applied) {
      pairs.push_back(&a.pair);
      m_rgb.push_back(a.rgb);
      m_thermal.push_back(a.thermal);
    }
    const auto [rgb, thermal] = to_tensors(pairs);
    auto dets = model.detect(rgb, thermal, m_rgb, m_thermal);
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = scenes[i];
      images.push_back({s.meta.image_id, s.meta.time, std::move(dets[i - start]), s.gts});
    }
  }
  return images;
}

const SplitResult* MRTable::find(Scenario s, EvalSplit split) const {
  for (const auto& c : cells)
    if (c.scenario == s && c.result.split == split) return &c.result;
  return nullptr;
}

MRTable evaluate_scenarios(const Model& model, std::span<const ScenePair> scenes,
                           std::span<const Scenario> scenarios, const EvalFilter& filter) {
  RGBT_REQUIRE(!scenes.empty(), "evaluation set is empty");
  MRTable table;
  for (Scenario s : scenarios) {
    const auto images = run_inference(model, scenes, s);
    for (EvalSplit split : kAllSplits)
      table.cells.push_back({s, evaluate_split(images, split, filter)});
  }
  return table;
}

MRTable evaluate_scenarios(const std::filesystem::path& checkpoint,
                           std::span<const ScenePair> scenes,
                           std::span<const Scenario> scenarios, const EvalFilter& filter) {
  const auto loaded = load_checkpoint(checkpoint);
  return evaluate_scenarios(loaded.model, scenes, scenarios, filter);
}

double mean_mr(const MRTable& table, std::span<const Scenario> scenarios, EvalSplit split) {
  double sum = 0.0;
  for (Scenario s : scenarios) {
    const SplitResult* r = table.find(s, split);
    if (!r || !r->defined) return std::numeric_limits<double>::quiet_NaN();
    sum += r->mr;
  }
  return sum / static_cast<double>(scenarios.size());
}

}  // namespace rgbt
