#include "retseg/adam.hpp"

#include <cmath>

namespace retseg {

void AdamHyper::validate() const {
  require(std::isfinite(lr) && lr > 0.0, ErrorCode::ConfigInvalid, "learning rate must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::ConfigInvalid,
          "adam betas must lie in [0,1)");
  require(eps > 0.0, ErrorCode::ConfigInvalid, "adam eps must be > 0");
}

template <class T>
void adam_step(Tensor4<T>& param, const Tensor4<T>& grad, AdamMoments<T>& moments, const AdamHyper& hyper,
               std::int64_t t) {
  require(param.shape() == grad.shape(), ErrorCode::ShapeMismatch,
          "adam_step: param " + to_string(param.shape()) + " vs grad " + to_string(grad.shape()));
  require(t >= 1, ErrorCode::InvalidArgument, "adam_step: t must be >= 1");
  require_finite(grad, "adam gradient");
  if (moments.m.size() == 0) moments = {Tensor4<T>(param.shape()), Tensor4<T>(param.shape())};
  require(moments.m.shape() == param.shape() && moments.v.shape() == param.shape(), ErrorCode::ShapeMismatch,
          "adam_step: moment shape mismatch");

  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  auto p = param.data();
  auto g = grad.data();
  auto m = moments.m.data();
  auto v = moments.v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
    const double vi = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    p[i] = static_cast<T>(p[i] - hyper.lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps));
  }
  require_finite(param, "adam update");
}

template <class T>
void AdamState<T>::step(ParameterList<T>& params, const LayerGrads<T>& grads) {
  for (const auto& p : params)
    require(grads.count(p.name) == 1, ErrorCode::ShapeMismatch, "adam: no gradient for parameter " + p.name);
  ++t_;
  for (auto& p : params) adam_step(p.value, grads.at(p.name), moments_[p.name], hyper_, t_);
}

template void adam_step<float>(Tensor4<float>&, const Tensor4<float>&, AdamMoments<float>&, const AdamHyper&,
                               std::int64_t);
template void adam_step<double>(Tensor4<double>&, const Tensor4<double>&, AdamMoments<double>&, const AdamHyper&,
                                std::int64_t);
template class AdamState<float>;
template class AdamState<double>;

}  // namespace retseg
