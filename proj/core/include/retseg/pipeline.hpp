#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retseg/codec.hpp"
#include "retseg/filters.hpp"
#include "retseg/manifest.hpp"
#include "retseg/report.hpp"
#include "retseg/trainer.hpp"
#include "retseg/unet.hpp"

namespace retseg {

enum class Approach { Gaussian, Gabor, Sobel };

std::string_view to_string(Approach a);
Approach approach_from_string(std::string_view name);
inline constexpr Approach kAllApproaches[] = {Approach::Gaussian, Approach::Gabor, Approach::Sobel};
inline constexpr const char* kAllModels[] = {"reti-unet1", "reti-unet2"};

struct FilterConfig {
  GaussianParams gaussian{};
  GaborParams gabor{};  // orientation is overridden by the bank
  int gabor_orientations = 8;
  SobelPruneParams sobel{};
};

/// Applies one preprocessing approach; output has the input's dimensions.
GrayImage apply_approach(const GrayImage& img, Approach approach, const FilterConfig& filters);

struct PipelineConfig {
  std::filesystem::path dataset_root = "data";
  std::filesystem::path output_dir = "runs";
  int target_width = 512;
  int target_height = 512;
  GrayMode gray_mode = GrayMode::GreenChannel;
  float mask_threshold = 0.5f;
  Approach approach = Approach::Gaussian;
  FilterConfig filters{};
  double rotation_degrees = 15.0;
  SplitCounts split{};
  bool grouped_split = false;
  std::string model = "reti-unet1";
  int width_scale = 1;
  std::uint64_t seed = 42;  // split shuffle, weight init and batch order
  TrainConfig train{};
  float threshold = 0.5f;

  UNetConfig unet() const { return UNetConfig::by_name(model, width_scale); }
  /// Rejects malformed values, including a target size not divisible by 2^depth.
  void validate() const;
};

std::string config_to_json(const PipelineConfig& cfg);
/// Missing keys take defaults; unknown keys are a ConfigInvalid error.
PipelineConfig config_from_json(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

/// Where each stage reads and writes for a given config.
struct StagePaths {
  std::filesystem::path root;                // output_dir
  std::filesystem::path stage;               // <root>/<approach>
  std::filesystem::path processed;           // <stage>/processed (images/, masks/)
  std::filesystem::path manifest;            // <stage>/manifest.json
  std::filesystem::path augmented_manifest;  // <stage>/augmented.json
  std::filesystem::path split;               // <stage>/split.json
  std::filesystem::path experiment;          // <stage>/<model>[-w<k>]
  std::filesystem::path checkpoint;          // <experiment>/checkpoint.rseg
  std::filesystem::path history;             // <experiment>/history.csv
  std::filesystem::path summary;             // <experiment>/train_summary.json
  std::filesystem::path report_csv;          // <experiment>/report.csv
  std::filesystem::path pred_dir;            // <experiment>/pred
};

StagePaths stage_paths(const PipelineConfig& cfg);

/// Resize, filter, and save every image; resize (nearest) and save masks; write manifest.json.
/// Returns the stage directory. Throws DatasetEmpty, PairMismatch.
std::filesystem::path run_preprocess(const PipelineConfig& cfg);

/// Expands the preprocessed originals 3x (hflip, vflip, rotation); runs preprocess if needed.
DatasetManifest run_augment(const PipelineConfig& cfg);

/// Seeded split of the augmented set; runs earlier stages if needed.
SplitManifest run_split(const PipelineConfig& cfg);

/// Trains on the split, saves the best-validation checkpoint, history and summary.
TrainResult run_train(const PipelineConfig& cfg);

/// Evaluates the saved checkpoint on the test split (and validation split, written
/// to report_val.csv). TT comes from the training summary when present.
ReportRow run_eval(const PipelineConfig& cfg);

/// train + eval + predicted test masks under pred/.
ReportRow run_experiment(const PipelineConfig& cfg);

/// Predicted mask for `image` (resized to the target size and preprocessed like the
/// training data) or, without an image, for every test entry. Returns written paths.
std::vector<std::filesystem::path> run_predict(const PipelineConfig& cfg,
                                               const std::optional<std::filesystem::path>& image = std::nullopt,
                                               const std::optional<std::filesystem::path>& out = std::nullopt);

/// report.csv rows of every experiment under output_dir.
std::vector<ReportRow> collect_rows(const std::filesystem::path& output_dir);

/// Writes <output_dir>/report.csv and report.md from collect_rows(); returns the rows.
std::vector<ReportRow> run_report(const PipelineConfig& cfg);

/// Every approach x model combination, then run_report.
std::vector<ReportRow> run_grid(const PipelineConfig& cfg);

}  // namespace retseg
