#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retseg/error.hpp"

namespace retseg {

struct Shape4 {
  int n = 0;  // batch
  int c = 0;  // channels
  int h = 0;  // rows
  int w = 0;  // cols

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

std::string to_string(const Shape4& s);

/// Rank-4 (n, c, h, w) row-major array.
template <class T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;
  explicit Tensor4(Shape4 shape, T fill = T(0));
  Tensor4(Shape4 shape, std::vector<T> data);

  const Shape4& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t offset(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& operator()(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }
  T operator()(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }

  T* plane(int n, int c) noexcept { return data_.data() + offset(n, c, 0, 0); }
  const T* plane(int n, int c) const noexcept { return data_.data() + offset(n, c, 0, 0); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }

  template <class U>
  Tensor4<U> cast() const {
    return Tensor4<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape4 shape_{};
  std::vector<T> data_;
};

using Tensor = Tensor4<float>;
using TensorD = Tensor4<double>;

template <class T>
void require_finite(const Tensor4<T>& t, const char* what) {
  require(t.all_finite(), ErrorCode::NonFiniteValue, std::string("non-finite value in ") + what);
}

template <class T>
struct NamedTensor {
  std::string name;
  Tensor4<T> value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Trainable parameters in deterministic build order.
template <class T>
using ParameterList = std::vector<NamedTensor<T>>;

/// One gradient per trainable parameter, keyed by parameter name.
template <class T>
using LayerGrads = std::map<std::string, Tensor4<T>>;

namespace nn {

/// Cross-correlation, stride 1, zero padding k/2 (same spatial size) for odd k.
/// weight: (out_c, in_c, k, k); bias: out_c values.
template <class T>
Tensor4<T> conv2d(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias);

template <class T>
struct Conv2dGrads {
  Tensor4<T> dx;
  Tensor4<T> dweight;
  Tensor4<T> dbias;  // (out_c, 1, 1, 1)
};

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight, const Tensor4<T>& dy);

template <class T>
struct PoolResult {
  Tensor4<T> y;
  std::vector<std::uint8_t> argmax;  // window slot 0..3, row-major within the 2x2 window
};

/// 2x2 max, stride 2. Ties resolve to the first slot in row-major order.
template <class T>
PoolResult<T> maxpool2(const Tensor4<T>& x);

template <class T>
Tensor4<T> maxpool2_backward(const Tensor4<T>& dy, std::span<const std::uint8_t> argmax, const Shape4& input_shape);

/// Transposed convolution, 2x2 kernel, stride 2, no padding.
/// weight: (in_c, out_c, 2, 2); output (n, out_c, 2h, 2w).
template <class T>
Tensor4<T> upconv2(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias);

template <class T>
Conv2dGrads<T> upconv2_backward(const Tensor4<T>& x, const Tensor4<T>& weight, const Tensor4<T>& dy);

template <class T>
Tensor4<T> relu(const Tensor4<T>& x);

/// `activated` may be either the relu input or its output; both give the same mask.
template <class T>
Tensor4<T> relu_backward(const Tensor4<T>& activated, const Tensor4<T>& dy);

/// Stable two-branch logistic; outputs are clamped into the open interval (0,1).
template <class T>
Tensor4<T> sigmoid(const Tensor4<T>& x);

template <class T>
Tensor4<T> sigmoid_backward(const Tensor4<T>& y, const Tensor4<T>& dy);

/// Channel stack, `a` first.
template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

/// Inverse of concat_channels: first `channels_a` channels, then the rest.
template <class T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& dy, int channels_a);

inline constexpr double kDiceEpsilon = 1.0;

template <class T>
struct DiceLoss {
  T loss;
  Tensor4<T> dprobs;
};

/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps), eps = 1, summed over the whole batch.
/// Sums are accumulated in double regardless of T.
template <class T>
DiceLoss<T> soft_dice_loss(const Tensor4<T>& probs, const Tensor4<T>& target);

}  // namespace nn
}  // namespace retseg
