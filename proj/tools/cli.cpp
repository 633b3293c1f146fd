// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "rgbt/blackout.hpp"
#include "rgbt/checkpoint.hpp"
#include "rgbt/config.hpp"
#include "rgbt/data.hpp"
#include "rgbt/error.hpp"
#include "rgbt/image.hpp"
#include "rgbt/report.hpp"
#include "rgbt/trainer.hpp"

namespace rgbt::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<std::uint64_t> seed_override() {
  const char* env = std::getenv("RGBT_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(env, &pos);
    if (pos == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("RGBT_SEED must be a non-negative integer, got '") + env + "'");
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg = path.empty() ? parse_experiment_config(nlohmann::json::object())
                                      : load_experiment_config(path);
  if (const auto seed = seed_override()) {
    cfg.synth.seed = *seed;
    cfg.train.seed = *seed;
  }
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");
  const fs::path probe = dir / ".rgbt_write_probe";
  std::ofstream f(probe);
  if (!f) throw IoError(dir.string(), "output directory is not writable");
  f.close();
  fs::remove(probe, ec);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<Scenario> parse_scenarios(const std::vector<std::string>& names) {
  std::vector<Scenario> out;
  for (const auto& list : names) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      if (item == "all") {
        out.assign(kAllScenarios.begin(), kAllScenarios.end());
        continue;
      }
      try {
        out.push_back(scenario_from_string(item));
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (out.empty()) out.assign(kAllScenarios.begin(), kAllScenarios.end());
  return out;
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::string config, out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  ensure_dir(a.out);
  generate_dataset(cfg.synth, a.out);
  out << (fs::path(a.out) / "manifest.json").string() << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config, data, out, ablate, label;
  bool no_aug = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.ablate == "no-ha") {
    cfg.model.backbone.hybrid_attention = false;
  } else if (!a.ablate.empty()) {
    throw UsageError("unknown ablation '" + a.ablate + "' (expected no-ha)");
  }
  if (a.no_aug) cfg.train.masking_augmentation = false;

  if (!fs::exists(fs::path(a.data) / "manifest.json"))
    throw IoError(a.data, "no dataset manifest found");
  const Manifest manifest = read_manifest(fs::path(a.data) / "manifest.json");
  if (manifest.config.contains("height") && manifest.config.contains("width")) {
    cfg.synth.height = manifest.config.at("height").get<int>();
    cfg.synth.width = manifest.config.at("width").get<int>();
  }
  cfg.model.image_height = cfg.synth.height;
  cfg.model.image_width = cfg.synth.width;
  cfg.validate();
  const auto scenes = load_split(a.data, Split::kTrain);
  RGBT_REQUIRE(!scenes.empty(), "training manifest is empty");
  ensure_dir(a.out);

  Model model(cfg.model, cfg.train.seed);
  TrainOptions options;
  options.on_epoch = [&](int epoch, double loss, double val) {
    out << "epoch " << epoch + 1 << "/" << cfg.train.epochs << "  loss " << std::fixed
        << std::setprecision(4) << loss;
    if (!std::isnan(val)) out << "  val MR " << std::setprecision(2) << val;
    out << std::defaultfloat << '\n';
  };
  const TrainResult result = train(model, scenes, cfg, options);

  const std::string label = !a.label.empty()           ? a.label
                            : !cfg.model.backbone.hybrid_attention
                                ? (cfg.train.masking_augmentation ? "no-ha" : "no-ha-no-aug")
                            : cfg.train.masking_augmentation ? "ha"
                                                             : "ha-no-aug";
  const nlohmann::json experiment = cfg;
  save_checkpoint(fs::path(a.out) / "checkpoint.rgbt", model,
                  {{"label", label}, {"experiment", experiment}, {"best_epoch", result.best_epoch}});
  std::ofstream history(fs::path(a.out) / "loss_history.csv", std::ios::trunc);
  if (!history) throw IoError((fs::path(a.out) / "loss_history.csv").string(), "cannot open");
  write_loss_history_csv(history, result.history);
  write_json(fs::path(a.out) / "config.json", experiment);
  write_json(fs::path(a.out) / "train_summary.json",
             {{"label", label},
              {"steps", result.history.size()},
              {"epochs_run", result.epochs_run},
              {"best_epoch", result.best_epoch},
              {"validation_mr", result.validation_mr}});
  out << (fs::path(a.out) / "checkpoint.rgbt").string() << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, data, out, label, detections;
  std::vector<std::string> scenarios;
  double min_height = -1;
  std::string split = "test";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto scenarios = parse_scenarios(a.scenarios);
  const LoadedCheckpoint ckpt = load_checkpoint(a.checkpoint);
  const auto& meta = ckpt.header.value("metadata", nlohmann::json::object());
  EvalFilter filter;
  if (meta.contains("experiment") && meta.at("experiment").contains("eval"))
    filter.min_height = meta.at("experiment").at("eval").value("min_height", filter.min_height);
  if (a.min_height >= 0) filter.min_height = a.min_height;
  if (a.split != "test" && a.split != "train") throw UsageError("--split must be train or test");
  if (!fs::exists(fs::path(a.data) / "manifest.json"))
    throw IoError(a.data, "no dataset manifest found");
  const auto scenes = load_split(a.data, a.split == "test" ? Split::kTest : Split::kTrain);

  const MRTable table = evaluate_scenarios(ckpt.model, scenes, scenarios, filter);
  const std::string label = a.label.empty() ? meta.value("label", std::string("model")) : a.label;
  const nlohmann::json metrics = metrics_file_json(label, table);
  out << format_mr_table(parse_metrics_file(metrics));
  if (!a.out.empty()) {
    const fs::path p(a.out);
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    write_json(p, metrics);
  }
  if (!a.detections.empty()) {
    std::ofstream os(a.detections, std::ios::trunc);
    if (!os) throw IoError(a.detections, "cannot open for writing");
    std::vector<DetectionRecord> records;
    for (const auto& im : run_inference(ckpt.model, scenes, scenarios.front()))
      for (const auto& d : im.dets) records.push_back({im.image_id, d});
    write_detections_jsonl(os, records);
  }
  return kOk;
}

struct SimulateArgs {
  std::string data, scenario, out;
  std::string split = "test";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  Scenario scenario;
  try {
    scenario = scenario_from_string(a.scenario);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  if (a.split != "test" && a.split != "train") throw UsageError("--split must be train or test");
  if (!fs::exists(fs::path(a.data) / "manifest.json"))
    throw IoError(a.data, "no dataset manifest found");
  const auto scenes = load_split(a.data, a.split == "test" ? Split::kTest : Split::kTrain);
  const fs::path root = fs::path(a.out) / to_string(scenario);
  for (const char* sub : {"rgb", "thermal", "mask_rgb", "mask_thermal"}) ensure_dir(root / sub);
  for (const auto& s : scenes) {
    const ScenarioResult r = apply_scenario(s, scenario);
    const std::string file = s.meta.image_id + ".png";
    write_png(root / "rgb" / file, r.pair.rgb);
    write_png(root / "thermal" / file, r.pair.thermal);
    write_mask_png(root / "mask_rgb" / file, r.rgb);
    write_mask_png(root / "mask_thermal" / file, r.thermal);
  }
  out << root.string() << '\n';
  return kOk;
}

struct ReportArgs {
  std::vector<std::string> metrics;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.metrics.empty()) throw UsageError("report needs at least one --metrics file");
  std::vector<MetricsFile> files;
  for (const auto& m : a.metrics) files.push_back(read_metrics_file(m));
  const ReportPaths p = write_report(files, a.out);
  out << p.summary_md.string() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multispectral pedestrian detection with hybrid attention", "rgbt"};
  app.require_subcommand(1);
  app.fallthrough(false);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic RGB-thermal dataset");
  c_synth->add_option("--config", synth.config, "Experiment config (JSON)");
  c_synth->add_option("--out", synth.out, "Output dataset directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a detector on a dataset");
  c_train->add_option("--config", tr.config, "Experiment config (JSON)");
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--out", tr.out, "Output directory")->required();
  c_train->add_option("--ablate", tr.ablate, "Ablation variant: no-ha");
  c_train->add_flag("--no-aug", tr.no_aug, "Disable masking augmentation");
  c_train->add_option("--label", tr.label, "Label stored in the checkpoint");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint under blackout scenarios");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_option("--scenarios,--scenario", ev.scenarios,
                     "Comma-separated scenarios (dual, rgb_blackout, thermal_blackout, "
                     "sides_rt, sides_tr, surrounding, all)");
  c_eval->add_option("--out", ev.out, "Metrics JSON output path");
  c_eval->add_option("--label", ev.label, "Label for the metrics file");
  c_eval->add_option("--min-height", ev.min_height, "Minimum evaluated box height in pixels");
  c_eval->add_option("--split", ev.split, "Dataset split: test or train");
  c_eval->add_option("--detections", ev.detections,
                     "Write detections of the first scenario as JSON lines");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Write blackout-applied image pairs and masks");
  c_sim->add_option("--data", sim.data, "Dataset directory")->required();
  c_sim->add_option("--scenario", sim.scenario, "Scenario name")->required();
  c_sim->add_option("--out", sim.out, "Output directory")->required();
  c_sim->add_option("--split", sim.split, "Dataset split: test or train");

  ReportArgs rep;
  auto* c_report = app.add_subcommand("report", "Plot and summarize metrics files");
  c_report->add_option("--metrics", rep.metrics, "Metrics JSON file (repeatable)");
  c_report->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*c_synth) return cmd_synth(synth, out);
    if (*c_train) return cmd_train(tr, out);
    if (*c_eval) return cmd_eval(ev, out);
    if (*c_sim) return cmd_simulate(sim, out);
    if (*c_report) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace rgbt::cli
