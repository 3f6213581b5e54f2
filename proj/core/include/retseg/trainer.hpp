#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retseg/adam.hpp"
#include "retseg/image.hpp"
#include "retseg/manifest.hpp"
#include "retseg/metrics.hpp"
#include "retseg/unet.hpp"

namespace retseg {

struct Sample {
  GrayImage image;  // already preprocessed
  BinaryMask mask;
  std::string name;
};

/// Loads preprocessed images and masks listed by a manifest.
std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 2;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  std::optional<int> early_stop_patience;
  std::filesystem::path checkpoint_path;  // periodic checkpoint target, if any
  float threshold = 0.5f;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  MetricsReport val;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  double training_seconds = 0.0;
  int best_epoch = 0;
  std::int64_t steps = 0;
};

struct TrainResult {
  TrainHistory history;
  ParameterList<float> best_parameters;  // highest validation IoU
  AdamState<float> optimizer;
};

/// Adam on soft Dice loss: `epochs` passes over a per-epoch seeded shuffle of
/// `train`, ceil(N / batch_size) steps each. Validation metrics every epoch; an
/// empty `val` set falls back to monitoring on `train`. `model` ends at the
/// final parameters; the best-IoU parameters are returned separately.
/// Throws EmptyTrainSet, NonFiniteLoss.
TrainResult train(UNet<float>& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
                  const TrainConfig& config);

/// Micro-averaged metrics over all pixels of all samples. Never modifies the model.
MetricsReport evaluate(const UNet<float>& model, const std::vector<Sample>& samples, float threshold = 0.5f);

/// Probability map for one image, shape (1, 1, h, w).
Tensor predict_probs(const UNet<float>& model, const GrayImage& image);

/// `prob >= threshold` per pixel. Shared by predict and evaluate.
BinaryMask binarize(const Tensor& probs, int batch_index, float threshold);

BinaryMask predict(const UNet<float>& model, const GrayImage& image, float threshold = 0.5f);

/// Header: epoch,train_loss,val_is,val_acc,val_rec,val_dl,val_dc
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

/// Stacks samples into (n, 1, h, w) image and mask tensors.
std::pair<Tensor, Tensor> make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices);

}  // namespace retseg
