#include "retseg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "retseg/checkpoint.hpp"
#include "retseg/codec.hpp"
#include "retseg/fsutil.hpp"
#include "retseg/rng.hpp"

namespace retseg {

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::ConfigInvalid, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::ConfigInvalid, "batch_size must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::ConfigInvalid,
          "learning_rate must be > 0");
  require(checkpoint_every >= 0, ErrorCode::ConfigInvalid, "checkpoint_every must be >= 0");
  require(!early_stop_patience || *early_stop_patience >= 1, ErrorCode::ConfigInvalid,
          "early_stop patience must be >= 1");
}

std::vector<Sample> load_samples(const std::vector<ManifestEntry>& entries) {
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s{load_image(e.image), load_mask(e.mask), e.image.stem().string()};
    require(s.image.width() == s.mask.width() && s.image.height() == s.mask.height(),
            ErrorCode::PairDimensionMismatch, e.image.string() + " and its mask differ in size");
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<Tensor, Tensor> make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCode::InvalidArgument, "empty batch");
  const Sample& first = samples[indices[0]];
  const int h = first.image.height(), w = first.image.width();
  const Shape4 shape{static_cast<int>(indices.size()), 1, h, w};
  Tensor x(shape), y(shape);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Sample& s = samples[indices[b]];
    require(s.image.width() == w && s.image.height() == h, ErrorCode::DimensionMismatch,
            "samples in one batch must share dimensions");
    std::copy(s.image.pixels().begin(), s.image.pixels().end(), x.plane(static_cast<int>(b), 0));
    std::transform(s.mask.pixels().begin(), s.mask.pixels().end(), y.plane(static_cast<int>(b), 0),
                   [](std::uint8_t v) { return static_cast<float>(v); });
  }
  return {std::move(x), std::move(y)};
}

BinaryMask binarize(const Tensor& probs, int batch_index, float threshold) {
  const int h = probs.h(), w = probs.w();
  const float* p = probs.plane(batch_index, 0);
  std::vector<std::uint8_t> out(probs.shape().plane());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return BinaryMask(w, h, std::move(out));
}

Tensor predict_probs(const UNet<float>& model, const GrayImage& image) {
  Tensor x(Shape4{1, 1, image.height(), image.width()},
           std::vector<float>(image.pixels().begin(), image.pixels().end()));
  return unet_forward(model, x, false).probs;
}

BinaryMask predict(const UNet<float>& model, const GrayImage& image, float threshold) {
  return binarize(predict_probs(model, image), 0, threshold);
}

MetricsReport evaluate(const UNet<float>& model, const std::vector<Sample>& samples, float threshold) {
  require(!samples.empty(), ErrorCode::EmptyEvalSet, "evaluation set is empty");
  ConfusionCounts counts;
  SoftDiceSums soft;
  for (const auto& s : samples) {
    const Tensor probs = predict_probs(model, s.image);
    counts += confusion(binarize(probs, 0, threshold), s.mask);
    soft += soft_dice_sums(probs.data(), s.mask.pixels());
  }
  return make_report(counts, soft);
}

TrainResult train(UNet<float>& model, const std::vector<Sample>& train_set, const std::vector<Sample>& val,
                  const TrainConfig& tc) {
  tc.validate();
  require(!train_set.empty(), ErrorCode::EmptyTrainSet, "training set is empty");
  const std::vector<Sample>& monitor = val.empty() ? train_set : val;

  TrainResult result{{}, model.parameters(), AdamState<float>(AdamHyper{tc.learning_rate})};
  Rng rng(tc.seed);
  std::vector<std::size_t> order(train_set.size());
  double best_iou = -1.0;
  int since_best = 0;

  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(tc.batch_size));
      auto [x, y] = make_batch(train_set, std::span(order).subspan(begin, end - begin));
      const std::string where =
          "at epoch " + std::to_string(epoch) + ", step " + std::to_string(result.history.steps + 1);
      float loss = 0.0f;
      try {
        const auto fwd = unet_forward(model, x, true);
        const auto dice = nn::soft_dice_loss(fwd.probs, y);
        if (!std::isfinite(dice.loss)) fail(ErrorCode::NonFiniteLoss, "loss became non-finite " + where);
        result.optimizer.step(model.parameters(), unet_backward(model, fwd, dice.dprobs));
        loss = dice.loss;
      } catch (const Error& e) {
        // overflow anywhere in the step surfaces as a diverged loss
        if (e.code() == ErrorCode::NonFiniteValue)
          fail(ErrorCode::NonFiniteLoss, "training diverged " + where + ": " + e.what());
        throw;
      }
      ++result.history.steps;
      loss_sum += loss;
      ++batches;
    }

    EpochRecord rec{epoch, loss_sum / batches, evaluate(model, monitor, tc.threshold)};
    result.history.epochs.push_back(rec);

    if (rec.val.is > best_iou) {
      best_iou = rec.val.is;
      result.history.best_epoch = epoch;
      result.best_parameters = model.parameters();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (tc.checkpoint_every > 0 && !tc.checkpoint_path.empty() && epoch % tc.checkpoint_every == 0)
      save_checkpoint(model, &result.optimizer, tc.checkpoint_path);
    if (tc.early_stop_patience && since_best >= *tc.early_stop_patience) break;
  }
  result.history.training_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) make_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::WriteFailure, "cannot write " + path.string());
  out << "epoch,train_loss,val_is,val_acc,val_rec,val_dl,val_dc\n";
  char line[256];
  for (const auto& r : history.epochs) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val.is,
                  r.val.acc, r.val.rec, r.val.dl, r.val.dc);
    out << line;
  }
  if (!out) fail(ErrorCode::WriteFailure, "short write to " + path.string());
}

}  // namespace retseg
