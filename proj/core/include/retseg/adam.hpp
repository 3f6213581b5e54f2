#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "retseg/tensor.hpp"

namespace retseg {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

template <class T>
struct AdamMoments {
  Tensor4<T> m;
  Tensor4<T> v;

  friend bool operator==(const AdamMoments&, const AdamMoments&) = default;
};

/// One bias-corrected Adam update of `param` at step `t` (t >= 1):
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Moments are zero-initialised on first use.
template <class T>
void adam_step(Tensor4<T>& param, const Tensor4<T>& grad, AdamMoments<T>& moments, const AdamHyper& hyper,
               std::int64_t t);

/// Optimizer state for a whole parameter list. Owned by the trainer.
template <class T>
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamHyper hyper) : hyper_(hyper) { hyper_.validate(); }

  /// Advances t and updates every parameter; each must have a gradient in `grads`.
  void step(ParameterList<T>& params, const LayerGrads<T>& grads);

  const AdamHyper& hyper() const noexcept { return hyper_; }
  std::int64_t t() const noexcept { return t_; }
  const std::map<std::string, AdamMoments<T>>& moments() const noexcept { return moments_; }

  /// Used when restoring from a checkpoint.
  void restore(std::int64_t t, std::map<std::string, AdamMoments<T>> moments) {
    t_ = t;
    moments_ = std::move(moments);
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;

 private:
  AdamHyper hyper_{};
  std::int64_t t_ = 0;
  std::map<std::string, AdamMoments<T>> moments_;
};

}  // namespace retseg
