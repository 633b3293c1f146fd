// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rgbt/blackout.hpp"
#include "rgbt/config.hpp"
#include "rgbt/evaluation.hpp"
#include "rgbt/model.hpp"

namespace rgbt {

/// Learning rate for a 0-based epoch under step decay.
double learning_rate(const TrainConfig& cfg, int epoch);

struct LossRecord {
  int epoch = 0;
  int step = 0;
  double lr = 0;
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<LossRecord> history;  // one record per optimizer step
  std::vector<double> validation_mr;  // per epoch, empty without a validation split
  int best_epoch = -1;
  int epochs_run = 0;
};

struct TrainOptions {
  /// Called after every epoch with (epoch, mean total loss, validation MR or NaN).
  std::function<void(int, double, double)> on_epoch;
};

/// Trains `model` in place. The tail `validation_fraction` of `scenes` is
/// held out to select the best epoch by MR(All) under the dual scenario; the
/// best weights are restored at the end. Weights are left float32-rounded.
TrainResult train(Model& model, std::span<const ScenePair> scenes, const ExperimentConfig& cfg,
                  const TrainOptions& options = {});

void write_loss_history_csv(std::ostream& os, std::span<const LossRecord> history);

/// Runs the model on every scene under a scenario; never augments.
std::vector<EvalImage> run_inference(const Model& model, std::span<const ScenePair> scenes,
                                     Scenario scenario, int batch_size = 16);

struct MRCell {
  Scenario scenario = Scenario::kDual;
  SplitResult result;
};

struct MRTable {
  std::vector<MRCell> cells;  // scenario-major, splits in All/Day/Night order

  const SplitResult* find(Scenario s, EvalSplit split) const;
};

MRTable evaluate_scenarios(const Model& model, std::span<const ScenePair> scenes,
                           std::span<const Scenario> scenarios, const EvalFilter& filter);
MRTable evaluate_scenarios(const std::filesystem::path& checkpoint,
                           std::span<const ScenePair> scenes,
                           std::span<const Scenario> scenarios, const EvalFilter& filter);

/// Mean MR(All) over the given scenarios; NaN if any cell is undefined.
double mean_mr(const MRTable& table, std::span<const Scenario> scenarios,
               EvalSplit split = EvalSplit::kAll);

}  // namespace rgbt
