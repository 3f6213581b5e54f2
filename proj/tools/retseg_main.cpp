// retseg: command-line front end for the preprocessing / U-Net pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "retseg/error.hpp"
#include "retseg/pipeline.hpp"
#include "retseg/report.hpp"

namespace fs = std::filesystem;
using namespace retseg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitReproduction = 5;

struct Overrides {
  fs::path config;
  std::optional<std::string> approach;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
  std::optional<int> width_scale;
  std::optional<fs::path> out;
  bool grouped = false;
};

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kExitConfig;
    case ErrorCategory::Numeric: return kExitNumeric;
    case ErrorCategory::Data: break;
  }
  return kExitData;
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg = load_config(o.config);
  if (o.approach) cfg.approach = approach_from_string(*o.approach);
  if (o.model) cfg.model = *o.model;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.width_scale) cfg.width_scale = *o.width_scale;
  if (o.out) cfg.output_dir = *o.out;
  if (o.grouped) cfg.grouped_split = true;
  cfg.validate();
  return cfg;
}

void print_row(const ReportRow& row) { std::cout << emit_report({row}, ReportFormat::Markdown); }

void add_common(CLI::App* cmd, Overrides& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config, "pipeline configuration (JSON)");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--approach", o.approach, "gaussian | gabor | sobel")
      ->check(CLI::IsMember({"gaussian", "gabor", "sobel"}));
  cmd->add_option("--model", o.model, "reti-unet1 | reti-unet2")->check(CLI::IsMember({"reti-unet1", "reti-unet2"}));
  cmd->add_option("--seed", o.seed, "seed for split, initialisation and batch order");
  cmd->add_option("--width-scale", o.width_scale, "divide every channel count by K")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--grouped", o.grouped, "keep the three variants of each original in the same split part");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retinal vessel segmentation: filtering, augmentation, Reti-UNet training and evaluation"};
  app.require_subcommand(1);
  Overrides o;
  bool force = false;
  std::optional<fs::path> image, output;
  bool compare_reference = false;

  auto* init = app.add_subcommand("init", "write a configuration file with every default filled in");
  add_common(init, o, false);
  init->callback([] {});
  init->get_option("--config")->required();
  init->add_flag("--force", force, "overwrite an existing file");

  auto* preprocess = app.add_subcommand("preprocess", "resize and filter the dataset");
  auto* augment = app.add_subcommand("augment", "flip/rotate every preprocessed original");
  auto* split = app.add_subcommand("split", "seeded train/val/test split of the augmented set");
  auto* train = app.add_subcommand("train", "train the selected model");
  auto* eval = app.add_subcommand("eval", "evaluate the trained checkpoint on the test split");
  auto* predict = app.add_subcommand("predict", "write predicted masks");
  auto* report = app.add_subcommand("report", "collect report.csv / report.md from all experiments");
  auto* grid = app.add_subcommand("grid", "train and evaluate every approach x model combination");
  for (auto* cmd : {preprocess, augment, split, train, eval, predict, report, grid}) add_common(cmd, o);
  predict->add_option("--image", image, "single input image (default: every test entry)")->check(CLI::ExistingFile);
  predict->add_option("--output", output, "output file (with --image) or directory");
  report->add_flag("--compare-reference", compare_reference,
                   "check the collected rows against the full-scale reference results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (init->parsed()) {
      if (fs::exists(o.config) && !force) fail(ErrorCode::ConfigInvalid, o.config.string() + " exists (use --force)");
      PipelineConfig cfg;
      if (o.approach) cfg.approach = approach_from_string(*o.approach);
      if (o.model) cfg.model = *o.model;
      if (o.seed) cfg.seed = *o.seed;
      if (o.width_scale) cfg.width_scale = *o.width_scale;
      if (o.out) cfg.output_dir = *o.out;
      if (o.grouped) cfg.grouped_split = true;
      cfg.validate();
      save_config(cfg, o.config);
      std::cout << "wrote " << o.config.string() << "\n";
      return 0;
    }

    const PipelineConfig cfg = resolve(o);
    if (preprocess->parsed()) {
      std::cout << "preprocessed into " << run_preprocess(cfg).string() << "\n";
    } else if (augment->parsed()) {
      std::cout << run_augment(cfg).size() << " augmented entries\n";
    } else if (split->parsed()) {
      const SplitManifest s = run_split(cfg);
      std::cout << "split " << s.train.size() << "/" << s.val.size() << "/" << s.test.size() << " (seed " << s.seed
                << (s.grouped ? ", grouped" : "") << ")\n";
    } else if (train->parsed()) {
      const TrainResult r = run_train(cfg);
      std::printf("trained %zu epochs, %lld steps, best epoch %d, %.1f s\n", r.history.epochs.size(),
                  static_cast<long long>(r.history.steps), r.history.best_epoch, r.history.training_seconds);
    } else if (eval->parsed()) {
      print_row(run_eval(cfg));
    } else if (predict->parsed()) {
      for (const auto& p : run_predict(cfg, image, output)) std::cout << p.string() << "\n";
    } else if (report->parsed()) {
      const auto rows = run_report(cfg);
      std::cout << emit_report(rows, ReportFormat::Markdown);
      if (compare_reference) {
        const ReproductionVerdict v = check_reproduction(rows);
        for (const auto& f : v.findings) std::cout << "mismatch: " << f << "\n";
        std::cout << (v.ok ? "reproduction within tolerance\n" : "reproduction outside tolerance\n");
        if (!v.ok) return kExitReproduction;
      }
    } else if (grid->parsed()) {
      std::cout << emit_report(run_grid(cfg), ReportFormat::Markdown);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
