#include "retseg/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "retseg/checkpoint.hpp"
#include "retseg/fsutil.hpp"

namespace retseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::ConfigInvalid, where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) == 1, ErrorCode::ConfigInvalid, "unknown config key '" + where + key + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) make_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::WriteFailure, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::WriteFailure, "short write to " + path.string());
}

void snapshot_config(const PipelineConfig& cfg, const fs::path& dir) {
  write_text(dir / "config.resolved.json", config_to_json(cfg));
}

std::vector<GaborParams> bank_of(const FilterConfig& f) { return gabor_bank(f.gabor, f.gabor_orientations); }

std::string model_dir_name(const PipelineConfig& cfg) {
  return cfg.width_scale == 1 ? cfg.model : cfg.model + "-w" + std::to_string(cfg.width_scale);
}

}  // namespace

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::Gaussian: return "gaussian";
    case Approach::Gabor: return "gabor";
    case Approach::Sobel: return "sobel";
  }
  return "unknown";
}

Approach approach_from_string(std::string_view name) {
  for (Approach a : kAllApproaches)
    if (to_string(a) == name) return a;
  fail(ErrorCode::ConfigInvalid, "unknown approach '" + std::string(name) + "' (expected gaussian, gabor or sobel)");
}

GrayImage apply_approach(const GrayImage& img, Approach approach, const FilterConfig& filters) {
  switch (approach) {
    case Approach::Gaussian: return gaussian_blur(img, filters.gaussian);
    case Approach::Gabor: return gabor_response(img, bank_of(filters));
    case Approach::Sobel: return sobel_prune(img, filters.sobel);
  }
  fail(ErrorCode::ConfigInvalid, "unknown approach");
}

void PipelineConfig::validate() const {
  require(target_width >= 1 && target_height >= 1, ErrorCode::ConfigInvalid, "target size must be positive");
  const UNetConfig net = unet();
  net.validate();
  const int stride = 1 << net.depth();
  require(target_width % stride == 0 && target_height % stride == 0, ErrorCode::ConfigInvalid,
          "target size " + std::to_string(target_width) + "x" + std::to_string(target_height) +
              " is not divisible by 2^depth = " + std::to_string(stride) + " for " + model);
  require(mask_threshold >= 0.0f && mask_threshold <= 1.0f, ErrorCode::ConfigInvalid,
          "mask_threshold must lie in [0,1]");
  require(std::isfinite(rotation_degrees), ErrorCode::ConfigInvalid, "rotation_degrees must be finite");
  require(split.total() > 0, ErrorCode::ConfigInvalid, "split counts are all zero");
  require(filters.gabor_orientations >= 1, ErrorCode::ConfigInvalid, "gabor orientations must be >= 1");
  filters.gaussian.validate();
  filters.gabor.validate();
  filters.sobel.validate();
  train.validate();
}

std::string config_to_json(const PipelineConfig& c) {
  const auto& f = c.filters;
  json j{
      {"dataset_root", c.dataset_root.generic_string()},
      {"output_dir", c.output_dir.generic_string()},
      {"target_size", {c.target_width, c.target_height}},
      {"gray_mode", c.gray_mode == GrayMode::GreenChannel ? "green" : "luminance"},
      {"mask_threshold", c.mask_threshold},
      {"approach", std::string(to_string(c.approach))},
      {"gaussian", {{"sigma", f.gaussian.sigma}, {"radius", f.gaussian.radius}}},
      {"gabor",
       {{"wavelength", f.gabor.wavelength},
        {"sigma", f.gabor.sigma},
        {"aspect", f.gabor.aspect},
        {"phase", f.gabor.phase},
        {"radius", f.gabor.radius},
        {"orientations", f.gabor_orientations}}},
      {"sobel", {{"edge_threshold", f.sobel.edge_threshold}, {"spur_iterations", f.sobel.spur_iterations}}},
      {"augment", {{"rotation_degrees", c.rotation_degrees}}},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"grouped", c.grouped_split}}},
      {"model", {{"name", c.model}, {"width_scale", c.width_scale}}},
      {"seed", c.seed},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"checkpoint_every", c.train.checkpoint_every},
        {"early_stop_patience",
         c.train.early_stop_patience ? json(*c.train.early_stop_patience) : json(nullptr)}}},
      {"threshold", c.threshold},
  };
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    check_keys(j,
               {"dataset_root", "output_dir", "target_size", "gray_mode", "mask_threshold", "approach", "gaussian",
                "gabor", "sobel", "augment", "split", "model", "seed", "train", "threshold"},
               "");
    c.dataset_root = j.value("dataset_root", c.dataset_root.string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (j.contains("target_size")) {
      const auto size = j.at("target_size").get<std::array<int, 2>>();
      c.target_width = size[0];
      c.target_height = size[1];
    }
    if (j.contains("gray_mode")) {
      const auto mode = j.at("gray_mode").get<std::string>();
      require(mode == "green" || mode == "luminance", ErrorCode::ConfigInvalid,
              "gray_mode must be 'green' or 'luminance'");
      c.gray_mode = mode == "green" ? GrayMode::GreenChannel : GrayMode::Luminance;
    }
    c.mask_threshold = j.value("mask_threshold", c.mask_threshold);
    if (j.contains("approach")) c.approach = approach_from_string(j.at("approach").get<std::string>());

    auto& f = c.filters;
    if (j.contains("gaussian")) {
      const auto& g = j.at("gaussian");
      check_keys(g, {"sigma", "radius"}, "gaussian.");
      f.gaussian.sigma = g.value("sigma", f.gaussian.sigma);
      f.gaussian.radius = g.value("radius", f.gaussian.radius);
    }
    if (j.contains("gabor")) {
      const auto& g = j.at("gabor");
      check_keys(g, {"wavelength", "sigma", "aspect", "phase", "radius", "orientations"}, "gabor.");
      f.gabor.wavelength = g.value("wavelength", f.gabor.wavelength);
      f.gabor.sigma = g.value("sigma", f.gabor.sigma);
      f.gabor.aspect = g.value("aspect", f.gabor.aspect);
      f.gabor.phase = g.value("phase", f.gabor.phase);
      f.gabor.radius = g.value("radius", f.gabor.radius);
      f.gabor_orientations = g.value("orientations", f.gabor_orientations);
    }
    if (j.contains("sobel")) {
      const auto& s = j.at("sobel");
      check_keys(s, {"edge_threshold", "spur_iterations"}, "sobel.");
      f.sobel.edge_threshold = s.value("edge_threshold", f.sobel.edge_threshold);
      f.sobel.spur_iterations = s.value("spur_iterations", f.sobel.spur_iterations);
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      check_keys(a, {"rotation_degrees"}, "augment.");
      c.rotation_degrees = a.value("rotation_degrees", c.rotation_degrees);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      check_keys(s, {"train", "val", "test", "grouped"}, "split.");
      c.split.train = s.value("train", c.split.train);
      c.split.val = s.value("val", c.split.val);
      c.split.test = s.value("test", c.split.test);
      c.grouped_split = s.value("grouped", c.grouped_split);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, {"name", "width_scale"}, "model.");
      c.model = m.value("name", c.model);
      c.width_scale = m.value("width_scale", c.width_scale);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, {"epochs", "batch_size", "learning_rate", "checkpoint_every", "early_stop_patience"}, "train.");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
      if (t.contains("early_stop_patience") && !t.at("early_stop_patience").is_null())
        c.train.early_stop_patience = t.at("early_stop_patience").get<int>();
    }
    c.threshold = j.value("threshold", c.threshold);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  c.train.seed = c.seed;
  c.train.threshold = c.threshold;
  return c;
}

PipelineConfig load_config(const fs::path& path) { return config_from_json(read_text(path)); }

void save_config(const PipelineConfig& cfg, const fs::path& path) { write_text(path, config_to_json(cfg)); }

StagePaths stage_paths(const PipelineConfig& cfg) {
  StagePaths p;
  p.root = cfg.output_dir;
  p.stage = p.root / std::string(to_string(cfg.approach));
  p.processed = p.stage / "processed";
  p.manifest = p.stage / "manifest.json";
  p.augmented_manifest = p.stage / "augmented.json";
  p.split = p.stage / "split.json";
  p.experiment = p.stage / model_dir_name(cfg);
  p.checkpoint = p.experiment / "checkpoint.rseg";
  p.history = p.experiment / "history.csv";
  p.summary = p.experiment / "train_summary.json";
  p.report_csv = p.experiment / "report.csv";
  p.pred_dir = p.experiment / "pred";
  return p;
}

namespace {

// A split on disk is reused only if it was made with the current seed and counts.
bool split_matches(const SplitManifest& split, const PipelineConfig& cfg) {
  return split.seed == cfg.seed && split.grouped == cfg.grouped_split && split.train.size() == cfg.split.train &&
         split.val.size() == cfg.split.val && split.test.size() == cfg.split.test;
}

}  // namespace

fs::path run_preprocess(const PipelineConfig& cfg) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  const DatasetManifest originals = scan_dataset(cfg.dataset_root);
  make_directories(p.processed / "images");
  make_directories(p.processed / "masks");

  DatasetManifest out;
  for (const auto& e : originals) {
    const GrayImage img = resize_bilinear(load_image(e.image, cfg.gray_mode), cfg.target_width, cfg.target_height);
    const BinaryMask mask =
        load_mask(e.mask, cfg.mask_threshold, std::pair{cfg.target_width, cfg.target_height});
    const std::string name = e.image.stem().string() + ".png";
    ManifestEntry pe{p.processed / "images" / name, p.processed / "masks" / name, e.origin_id, "orig"};
    save_image(apply_approach(img, cfg.approach, cfg.filters), pe.image);
    save_image(mask, pe.mask);
    out.push_back(std::move(pe));
  }
  save_manifest(out, p.manifest);
  snapshot_config(cfg, p.stage);
  return p.stage;
}

DatasetManifest run_augment(const PipelineConfig& cfg) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  if (!fs::exists(p.manifest)) run_preprocess(cfg);
  DatasetManifest augmented = augment_dataset(load_manifest(p.manifest), cfg.rotation_degrees, p.processed);
  save_manifest(augmented, p.augmented_manifest);
  return augmented;
}

SplitManifest run_split(const PipelineConfig& cfg) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  if (!fs::exists(p.augmented_manifest)) run_augment(cfg);
  SplitManifest split = split_dataset(load_manifest(p.augmented_manifest), cfg.split, cfg.seed, cfg.grouped_split);
  save_split(split, p.split);
  return split;
}

TrainResult run_train(const PipelineConfig& cfg) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  SplitManifest split = fs::exists(p.split) ? load_split(p.split) : run_split(cfg);
  if (!split_matches(split, cfg)) split = run_split(cfg);
  const auto train_set = load_samples(split.train);
  const auto val_set = load_samples(split.val);

  make_directories(p.experiment);
  snapshot_config(cfg, p.experiment);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.threshold = cfg.threshold;
  if (tc.checkpoint_every > 0) tc.checkpoint_path = p.experiment / "checkpoint.last.rseg";

  UNet<float> model(cfg.unet(), cfg.seed);
  TrainResult result = train(model, train_set, val_set, tc);

  UNet<float> best(cfg.unet(), cfg.seed, result.best_parameters);
  save_checkpoint(best, &result.optimizer, p.checkpoint);
  write_history_csv(result.history, p.history);
  json summary{{"training_seconds", result.history.training_seconds},
               {"best_epoch", result.history.best_epoch},
               {"steps", result.history.steps},
               {"epochs_completed", result.history.epochs.size()}};
  write_text(p.summary, summary.dump(2) + "\n");
  return result;
}

ReportRow run_eval(const PipelineConfig& cfg) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  const SplitManifest split = load_split(p.split);
  const Checkpoint ck = load_checkpoint(p.checkpoint);

  double tt = 0.0;
  if (fs::exists(p.summary)) tt = json::parse(read_text(p.summary)).value("training_seconds", 0.0);

  const std::string approach(to_string(cfg.approach));
  ReportRow row{cfg.model, approach, evaluate(ck.model, load_samples(split.test), cfg.threshold)};
  row.metrics.tt = tt;
  write_text(p.report_csv, emit_report({row}, ReportFormat::Csv));
  if (!split.val.empty()) {
    ReportRow val_row{cfg.model, approach, evaluate(ck.model, load_samples(split.val), cfg.threshold)};
    val_row.metrics.tt = tt;
    write_text(p.experiment / "report_val.csv", emit_report({val_row}, ReportFormat::Csv));
  }
  return row;
}

std::vector<fs::path> run_predict(const PipelineConfig& cfg, const std::optional<fs::path>& image,
                                  const std::optional<fs::path>& out) {
  cfg.validate();
  const StagePaths p = stage_paths(cfg);
  const Checkpoint ck = load_checkpoint(p.checkpoint);
  std::vector<fs::path> written;
  if (image) {
    const GrayImage raw = resize_bilinear(load_image(*image, cfg.gray_mode), cfg.target_width, cfg.target_height);
    const fs::path target = out ? *out : p.pred_dir / (image->stem().string() + ".png");
    if (target.has_parent_path()) make_directories(target.parent_path());
    save_image(predict(ck.model, apply_approach(raw, cfg.approach, cfg.filters), cfg.threshold), target);
    written.push_back(target);
    return written;
  }
  const fs::path dir = out ? *out : p.pred_dir;
  make_directories(dir);
  for (const auto& e : load_split(p.split).test) {
    const fs::path target = dir / (e.image.stem().string() + ".png");
    save_image(predict(ck.model, load_image(e.image), cfg.threshold), target);
    written.push_back(target);
  }
  return written;
}

ReportRow run_experiment(const PipelineConfig& cfg) {
  run_train(cfg);
  ReportRow row = run_eval(cfg);
  run_predict(cfg);
  return row;
}

std::vector<ReportRow> collect_rows(const fs::path& output_dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(output_dir))
    for (const auto& stage : fs::directory_iterator(output_dir)) {
      if (!stage.is_directory()) continue;
      for (const auto& exp : fs::directory_iterator(stage.path()))
        if (exp.is_directory() && fs::exists(exp.path() / "report.csv")) files.push_back(exp.path() / "report.csv");
    }
  std::sort(files.begin(), files.end());
  std::vector<ReportRow> rows;
  for (const auto& f : files) {
    auto part = parse_report_csv(read_text(f));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<ReportRow> run_report(const PipelineConfig& cfg) {
  auto rows = collect_rows(cfg.output_dir);
  write_text(cfg.output_dir / "report.csv", emit_report(rows, ReportFormat::Csv));
  write_text(cfg.output_dir / "report.md", emit_report(rows, ReportFormat::Markdown));
  return rows;
}

std::vector<ReportRow> run_grid(const PipelineConfig& cfg) {
  // validate every combination before any work starts
  for (Approach a : kAllApproaches)
    for (const char* m : kAllModels) {
      PipelineConfig c = cfg;
      c.approach = a;
      c.model = m;
      c.validate();
    }
  snapshot_config(cfg, cfg.output_dir);
  for (Approach a : kAllApproaches)
    for (const char* m : kAllModels) {
      PipelineConfig c = cfg;
      c.approach = a;
      c.model = m;
      run_experiment(c);
    }
  return run_report(cfg);
}

}  // namespace retseg
