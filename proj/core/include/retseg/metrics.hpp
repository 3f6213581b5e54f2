#pragma once

#include <cstdint>
#include <span>

#include "retseg/image.hpp"

namespace retseg {

/// Pixel counts with vessel (1) as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);
ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

struct HardMetrics {
  double iou;
  double accuracy;
  double recall;
  double dice;
};

/// IoU = tp/(tp+fp+fn), Acc = (tp+tn)/total, Rec = tp/(tp+fn), Dice = 2tp/(2tp+fp+fn).
/// A zero denominator means both sets are empty and yields 1.0. Throws EmptyConfusion on total 0.
HardMetrics hard_metrics(const ConfusionCounts& c);

/// IoU / Dice loss. Throws ZeroDiceLoss when dice_loss <= 0.
double efficacy_ratio(double iou, double dice_loss);

/// Running sums for the soft Dice score, accumulated across images.
struct SoftDiceSums {
  double intersection = 0.0;  // sum p*t
  double sum_probs = 0.0;
  double sum_target = 0.0;

  SoftDiceSums& operator+=(const SoftDiceSums& o) noexcept {
    intersection += o.intersection;
    sum_probs += o.sum_probs;
    sum_target += o.sum_target;
    return *this;
  }
  /// (2 sum(p t) + 1) / (sum p + sum t + 1)
  double coefficient() const noexcept;
  double loss() const noexcept { return 1.0 - coefficient(); }
};

SoftDiceSums soft_dice_sums(std::span<const float> probs, std::span<const std::uint8_t> gt);

struct SoftDice {
  double dc;
  double dl;
};

SoftDice soft_dice_metric(std::span<const float> probs, std::span<const std::uint8_t> gt);

/// One row of the results table.
struct MetricsReport {
  double is = 0.0;   // IoU score
  double acc = 0.0;
  double rec = 0.0;
  double dl = 0.0;   // soft Dice loss
  double dc = 0.0;   // soft Dice coefficient
  double tt = 0.0;   // training seconds
  double er = 0.0;   // IoU / DL; +inf when DL == 0
};

/// Hard IS/Acc/Rec from `counts`, soft DC/DL from `soft`, ER from both.
MetricsReport make_report(const ConfusionCounts& counts, const SoftDiceSums& soft, double training_seconds = 0.0);

}  // namespace retseg
