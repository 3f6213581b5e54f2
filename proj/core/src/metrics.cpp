#include "retseg/metrics.hpp"

#include <cmath>
#include <limits>

#include "retseg/tensor.hpp"

namespace retseg {
namespace {

double ratio_or_one(double num, double den) { return den == 0.0 ? 1.0 : num / den; }

}  // namespace

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  require(pred.size() == gt.size(), ErrorCode::DimensionMismatch, "prediction and ground truth sizes differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require(pred.width() == gt.width() && pred.height() == gt.height(), ErrorCode::DimensionMismatch,
          "prediction and ground truth dimensions differ");
  return confusion(pred.pixels(), gt.pixels());
}

HardMetrics hard_metrics(const ConfusionCounts& c) {
  require(c.total() > 0, ErrorCode::EmptyConfusion, "no pixels were evaluated");
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  return HardMetrics{ratio_or_one(tp, tp + fp + fn), (tp + tn) / static_cast<double>(c.total()),
                     ratio_or_one(tp, tp + fn), ratio_or_one(2.0 * tp, 2.0 * tp + fp + fn)};
}

double efficacy_ratio(double iou, double dice_loss) {
  require(dice_loss > 0.0, ErrorCode::ZeroDiceLoss, "efficacy ratio undefined for zero Dice loss");
  return iou / dice_loss;
}

double SoftDiceSums::coefficient() const noexcept {
  return (2.0 * intersection + nn::kDiceEpsilon) / (sum_probs + sum_target + nn::kDiceEpsilon);
}

SoftDiceSums soft_dice_sums(std::span<const float> probs, std::span<const std::uint8_t> gt) {
  require(probs.size() == gt.size(), ErrorCode::ShapeMismatch, "probability and ground truth sizes differ");
  SoftDiceSums s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s.intersection += static_cast<double>(probs[i]) * gt[i];
    s.sum_probs += probs[i];
    s.sum_target += gt[i];
  }
  return s;
}

SoftDice soft_dice_metric(std::span<const float> probs, std::span<const std::uint8_t> gt) {
  const SoftDiceSums s = soft_dice_sums(probs, gt);
  return {s.coefficient(), s.loss()};
}

MetricsReport make_report(const ConfusionCounts& counts, const SoftDiceSums& soft, double training_seconds) {
  const HardMetrics h = hard_metrics(counts);
  MetricsReport r;
  r.is = h.iou;
  r.acc = h.accuracy;
  r.rec = h.recall;
  r.dc = soft.coefficient();
  r.dl = soft.loss();
  r.tt = training_seconds;
  r.er = r.dl > 0.0 ? efficacy_ratio(r.is, r.dl) : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace retseg
