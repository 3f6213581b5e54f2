#include "retseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace retseg {

std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

template <class T>
Tensor4<T>::Tensor4(Shape4 shape, T fill) : shape_(shape), data_(shape.count(), fill) {
  require(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0, ErrorCode::ShapeMismatch,
          "negative tensor dimension");
}

template <class T>
Tensor4<T>::Tensor4(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  require(data_.size() == shape.count(), ErrorCode::ShapeMismatch,
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " + to_string(shape));
}

template <class T>
bool Tensor4<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class Tensor4<float>;
template class Tensor4<double>;

namespace nn {
namespace {

template <class T>
void require_bias(std::span<const T> bias, int channels) {
  require(bias.size() == static_cast<std::size_t>(channels), ErrorCode::ShapeMismatch,
          "bias length " + std::to_string(bias.size()) + " != " + std::to_string(channels));
}

// Valid output range [lo, hi) along one axis for tap offset `off` so that
// index + off stays inside [0, size).
inline std::pair<int, int> valid_range(int off, int size) {
  return {std::max(0, -off), std::min(size, size - off)};
}

}  // namespace

template <class T>
Tensor4<T> conv2d(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias) {
  const Shape4 ws = weight.shape();
  require(ws.h == ws.w && ws.h % 2 == 1, ErrorCode::ShapeMismatch, "conv2d kernel must be square and odd");
  require(x.c() == ws.c, ErrorCode::ShapeMismatch,
          "conv2d input channels " + std::to_string(x.c()) + " != weight in_c " + std::to_string(ws.c));
  require_bias(bias, ws.n);
  const int k = ws.h, pad = k / 2, H = x.h(), W = x.w();

  Tensor4<T> y(Shape4{x.n(), ws.n, H, W});
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < ws.n; ++oc) {
      T* out = y.plane(n, oc);
      std::fill(out, out + y.shape().plane(), bias[oc]);
      for (int ic = 0; ic < ws.c; ++ic) {
        const T* in = x.plane(n, ic);
        for (int ky = 0; ky < k; ++ky) {
          const int oy = ky - pad;
          const auto [y0, y1] = valid_range(oy, H);
          for (int kx = 0; kx < k; ++kx) {
            const int ox = kx - pad;
            const auto [x0, x1] = valid_range(ox, W);
            const T wv = weight(oc, ic, ky, kx);
            for (int r = y0; r < y1; ++r) {
              T* orow = out + static_cast<std::size_t>(r) * W;
              const T* irow = in + static_cast<std::size_t>(r + oy) * W + ox;
              for (int c = x0; c < x1; ++c) orow[c] += wv * irow[c];
            }
          }
        }
      }
    }
  require_finite(y, "conv2d output");
  return y;
}

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight, const Tensor4<T>& dy) {
  const Shape4 ws = weight.shape();
  require(dy.shape() == Shape4{x.n(), ws.n, x.h(), x.w()}, ErrorCode::ShapeMismatch,
          "conv2d_backward: dy shape " + to_string(dy.shape()));
  require(x.c() == ws.c, ErrorCode::ShapeMismatch, "conv2d_backward: channel mismatch");
  const int k = ws.h, pad = k / 2, H = x.h(), W = x.w();

  Conv2dGrads<T> g{Tensor4<T>(x.shape()), Tensor4<T>(ws), Tensor4<T>(Shape4{ws.n, 1, 1, 1})};

  for (int oc = 0; oc < ws.n; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const T* d = dy.plane(n, oc);
      for (std::size_t i = 0; i < dy.shape().plane(); ++i) acc += d[i];
    }
    g.dbias(oc, 0, 0, 0) = static_cast<T>(acc);
  }

  for (int oc = 0; oc < ws.n; ++oc)
    for (int ic = 0; ic < ws.c; ++ic)
      for (int ky = 0; ky < k; ++ky) {
        const int oy = ky - pad;
        const auto [y0, y1] = valid_range(oy, H);
        for (int kx = 0; kx < k; ++kx) {
          const int ox = kx - pad;
          const auto [x0, x1] = valid_range(ox, W);
          double acc = 0.0;
          for (int n = 0; n < x.n(); ++n) {
            const T* d = dy.plane(n, oc);
            const T* in = x.plane(n, ic);
            for (int r = y0; r < y1; ++r) {
              const T* drow = d + static_cast<std::size_t>(r) * W;
              const T* irow = in + static_cast<std::size_t>(r + oy) * W + ox;
              T row = T(0);
              for (int c = x0; c < x1; ++c) row += drow[c] * irow[c];
              acc += row;
            }
          }
          g.dweight(oc, ic, ky, kx) = static_cast<T>(acc);
        }
      }

  for (int n = 0; n < x.n(); ++n)
    for (int ic = 0; ic < ws.c; ++ic) {
      T* dx = g.dx.plane(n, ic);
      for (int oc = 0; oc < ws.n; ++oc) {
        const T* d = dy.plane(n, oc);
        for (int ky = 0; ky < k; ++ky) {
          const int oy = ky - pad;
          const auto [y0, y1] = valid_range(oy, H);
          for (int kx = 0; kx < k; ++kx) {
            const int ox = kx - pad;
            const auto [x0, x1] = valid_range(ox, W);
            const T wv = weight(oc, ic, ky, kx);
            for (int r = y0; r < y1; ++r) {
              T* dxrow = dx + static_cast<std::size_t>(r + oy) * W + ox;
              const T* drow = d + static_cast<std::size_t>(r) * W;
              for (int c = x0; c < x1; ++c) dxrow[c] += wv * drow[c];
            }
          }
        }
      }
    }
  return g;
}

template <class T>
PoolResult<T> maxpool2(const Tensor4<T>& x) {
  require(x.h() % 2 == 0 && x.w() % 2 == 0, ErrorCode::OddSpatialDim,
          "maxpool2 needs even spatial dims, got " + to_string(x.shape()));
  const int H = x.h() / 2, W = x.w() / 2;
  PoolResult<T> r{Tensor4<T>(Shape4{x.n(), x.c(), H, W}), std::vector<std::uint8_t>(x.size() / 4)};
  std::size_t i = 0;
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx, ++i) {
          std::uint8_t best = 0;
          T value = x(n, c, 2 * y, 2 * xx);
          for (std::uint8_t s = 1; s < 4; ++s) {
            const T v = x(n, c, 2 * y + s / 2, 2 * xx + s % 2);
            if (v > value) {
              value = v;
              best = s;
            }
          }
          r.y(n, c, y, xx) = value;
          r.argmax[i] = best;
        }
  return r;
}

template <class T>
Tensor4<T> maxpool2_backward(const Tensor4<T>& dy, std::span<const std::uint8_t> argmax, const Shape4& input_shape) {
  require(dy.shape() == Shape4{input_shape.n, input_shape.c, input_shape.h / 2, input_shape.w / 2} &&
              argmax.size() == dy.size(),
          ErrorCode::ShapeMismatch, "maxpool2_backward: shape mismatch");
  Tensor4<T> dx(input_shape);
  std::size_t i = 0;
  for (int n = 0; n < dy.n(); ++n)
    for (int c = 0; c < dy.c(); ++c)
      for (int y = 0; y < dy.h(); ++y)
        for (int xx = 0; xx < dy.w(); ++xx, ++i) {
          const int s = argmax[i];
          dx(n, c, 2 * y + s / 2, 2 * xx + s % 2) += dy(n, c, y, xx);
        }
  return dx;
}

template <class T>
Tensor4<T> upconv2(const Tensor4<T>& x, const Tensor4<T>& weight, std::span<const T> bias) {
  const Shape4 ws = weight.shape();
  require(ws.h == 2 && ws.w == 2, ErrorCode::ShapeMismatch, "upconv2 kernel must be 2x2");
  require(x.c() == ws.n, ErrorCode::ShapeMismatch,
          "upconv2 input channels " + std::to_string(x.c()) + " != weight in_c " + std::to_string(ws.n));
  require_bias(bias, ws.c);
  const int H = x.h(), W = x.w(), OW = 2 * W;
  Tensor4<T> y(Shape4{x.n(), ws.c, 2 * H, 2 * W});
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < ws.c; ++oc) {
      T* out = y.plane(n, oc);
      std::fill(out, out + y.shape().plane(), bias[oc]);
      for (int ic = 0; ic < ws.n; ++ic) {
        const T* in = x.plane(n, ic);
        const T w00 = weight(ic, oc, 0, 0), w01 = weight(ic, oc, 0, 1);
        const T w10 = weight(ic, oc, 1, 0), w11 = weight(ic, oc, 1, 1);
        for (int r = 0; r < H; ++r) {
          T* top = out + static_cast<std::size_t>(2 * r) * OW;
          T* bot = top + OW;
          const T* irow = in + static_cast<std::size_t>(r) * W;
          for (int c = 0; c < W; ++c) {
            const T v = irow[c];
            top[2 * c] += v * w00;
            top[2 * c + 1] += v * w01;
            bot[2 * c] += v * w10;
            bot[2 * c + 1] += v * w11;
          }
        }
      }
    }
  require_finite(y, "upconv2 output");
  return y;
}

template <class T>
Conv2dGrads<T> upconv2_backward(const Tensor4<T>& x, const Tensor4<T>& weight, const Tensor4<T>& dy) {
  const Shape4 ws = weight.shape();
  require(dy.shape() == Shape4{x.n(), ws.c, 2 * x.h(), 2 * x.w()}, ErrorCode::ShapeMismatch,
          "upconv2_backward: dy shape " + to_string(dy.shape()));
  const int H = x.h(), W = x.w(), OW = 2 * W;
  Conv2dGrads<T> g{Tensor4<T>(x.shape()), Tensor4<T>(ws), Tensor4<T>(Shape4{ws.c, 1, 1, 1})};

  for (int oc = 0; oc < ws.c; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const T* d = dy.plane(n, oc);
      for (std::size_t i = 0; i < dy.shape().plane(); ++i) acc += d[i];
    }
    g.dbias(oc, 0, 0, 0) = static_cast<T>(acc);
  }

  for (int ic = 0; ic < ws.n; ++ic)
    for (int oc = 0; oc < ws.c; ++oc) {
      double a00 = 0, a01 = 0, a10 = 0, a11 = 0;
      for (int n = 0; n < x.n(); ++n) {
        const T* in = x.plane(n, ic);
        const T* d = dy.plane(n, oc);
        for (int r = 0; r < H; ++r) {
          const T* top = d + static_cast<std::size_t>(2 * r) * OW;
          const T* bot = top + OW;
          const T* irow = in + static_cast<std::size_t>(r) * W;
          for (int c = 0; c < W; ++c) {
            const double v = irow[c];
            a00 += v * top[2 * c];
            a01 += v * top[2 * c + 1];
            a10 += v * bot[2 * c];
            a11 += v * bot[2 * c + 1];
          }
        }
      }
      g.dweight(ic, oc, 0, 0) = static_cast<T>(a00);
      g.dweight(ic, oc, 0, 1) = static_cast<T>(a01);
      g.dweight(ic, oc, 1, 0) = static_cast<T>(a10);
      g.dweight(ic, oc, 1, 1) = static_cast<T>(a11);
    }

  for (int n = 0; n < x.n(); ++n)
    for (int ic = 0; ic < ws.n; ++ic) {
      T* dx = g.dx.plane(n, ic);
      for (int oc = 0; oc < ws.c; ++oc) {
        const T* d = dy.plane(n, oc);
        const T w00 = weight(ic, oc, 0, 0), w01 = weight(ic, oc, 0, 1);
        const T w10 = weight(ic, oc, 1, 0), w11 = weight(ic, oc, 1, 1);
        for (int r = 0; r < H; ++r) {
          const T* top = d + static_cast<std::size_t>(2 * r) * OW;
          const T* bot = top + OW;
          T* dxrow = dx + static_cast<std::size_t>(r) * W;
          for (int c = 0; c < W; ++c)
            dxrow[c] += w00 * top[2 * c] + w01 * top[2 * c + 1] + w10 * bot[2 * c] + w11 * bot[2 * c + 1];
        }
      }
    }
  return g;
}

template <class T>
Tensor4<T> relu(const Tensor4<T>& x) {
  require_finite(x, "relu input");
  Tensor4<T> y = x;
  for (T& v : y.data()) v = v > T(0) ? v : T(0);
  return y;
}

template <class T>
Tensor4<T> relu_backward(const Tensor4<T>& activated, const Tensor4<T>& dy) {
  require(activated.shape() == dy.shape(), ErrorCode::ShapeMismatch, "relu_backward: shape mismatch");
  Tensor4<T> dx = dy;
  auto a = activated.data();
  auto d = dx.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(a[i] > T(0))) d[i] = T(0);
  return dx;
}

template <class T>
Tensor4<T> sigmoid(const Tensor4<T>& x) {
  require_finite(x, "sigmoid input");
  // Saturated outputs are held strictly inside (0,1).
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  Tensor4<T> y = x;
  for (T& v : y.data()) {
    // never exponentiate a positive number
    if (v >= T(0)) {
      v = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      v = e / (T(1) + e);
    }
    v = std::clamp(v, lo, hi);
  }
  return y;
}

template <class T>
Tensor4<T> sigmoid_backward(const Tensor4<T>& y, const Tensor4<T>& dy) {
  require(y.shape() == dy.shape(), ErrorCode::ShapeMismatch, "sigmoid_backward: shape mismatch");
  Tensor4<T> dx = dy;
  auto yv = y.data();
  auto d = dx.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= yv[i] * (T(1) - yv[i]);
  return dx;
}

template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  require(a.n() == b.n() && a.h() == b.h() && a.w() == b.w(), ErrorCode::SpatialMismatch,
          "concat_channels: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor4<T> y(Shape4{a.n(), a.c() + b.c(), a.h(), a.w()});
  const std::size_t plane = a.shape().plane();
  for (int n = 0; n < a.n(); ++n) {
    std::copy_n(a.plane(n, 0), plane * a.c(), y.plane(n, 0));
    std::copy_n(b.plane(n, 0), plane * b.c(), y.plane(n, a.c()));
  }
  return y;
}

template <class T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& dy, int channels_a) {
  require(channels_a >= 0 && channels_a <= dy.c(), ErrorCode::ShapeMismatch, "split_channels: bad split point");
  Tensor4<T> a(Shape4{dy.n(), channels_a, dy.h(), dy.w()});
  Tensor4<T> b(Shape4{dy.n(), dy.c() - channels_a, dy.h(), dy.w()});
  const std::size_t plane = dy.shape().plane();
  for (int n = 0; n < dy.n(); ++n) {
    std::copy_n(dy.plane(n, 0), plane * a.c(), a.plane(n, 0));
    std::copy_n(dy.plane(n, channels_a), plane * b.c(), b.plane(n, 0));
  }
  return {std::move(a), std::move(b)};
}

template <class T>
DiceLoss<T> soft_dice_loss(const Tensor4<T>& probs, const Tensor4<T>& target) {
  require(probs.shape() == target.shape(), ErrorCode::ShapeMismatch,
          "soft_dice_loss: " + to_string(probs.shape()) + " vs " + to_string(target.shape()));
  auto p = probs.data();
  auto t = target.data();
  double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += static_cast<double>(p[i]) * t[i];
    sum_p += p[i];
    sum_t += t[i];
  }
  const double num = 2.0 * inter + kDiceEpsilon;
  const double den = sum_p + sum_t + kDiceEpsilon;
  DiceLoss<T> out{static_cast<T>(1.0 - num / den), Tensor4<T>(probs.shape())};
  // d/dp_i [1 - num/den] = (num - 2 t_i den) / den^2
  auto d = out.dprobs.data();
  const double den2 = den * den;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<T>((num - 2.0 * t[i] * den) / den2);
  return out;
}

#define RETSEG_INSTANTIATE_NN(T)                                                                        \
  template Tensor4<T> conv2d<T>(const Tensor4<T>&, const Tensor4<T>&, std::span<const T>);              \
  template Conv2dGrads<T> conv2d_backward<T>(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&);  \
  template PoolResult<T> maxpool2<T>(const Tensor4<T>&);                                                \
  template Tensor4<T> maxpool2_backward<T>(const Tensor4<T>&, std::span<const std::uint8_t>,            \
                                           const Shape4&);                                              \
  template Tensor4<T> upconv2<T>(const Tensor4<T>&, const Tensor4<T>&, std::span<const T>);             \
  template Conv2dGrads<T> upconv2_backward<T>(const Tensor4<T>&, const Tensor4<T>&, const Tensor4<T>&); \
  template Tensor4<T> relu<T>(const Tensor4<T>&);                                                       \
  template Tensor4<T> relu_backward<T>(const Tensor4<T>&, const Tensor4<T>&);                           \
  template Tensor4<T> sigmoid<T>(const Tensor4<T>&);                                                    \
  template Tensor4<T> sigmoid_backward<T>(const Tensor4<T>&, const Tensor4<T>&);                        \
  template Tensor4<T> concat_channels<T>(const Tensor4<T>&, const Tensor4<T>&);                         \
  template std::pair<Tensor4<T>, Tensor4<T>> split_channels<T>(const Tensor4<T>&, int);                 \
  template DiceLoss<T> soft_dice_loss<T>(const Tensor4<T>&, const Tensor4<T>&);

RETSEG_INSTANTIATE_NN(float)
RETSEG_INSTANTIATE_NN(double)

#undef RETSEG_INSTANTIATE_NN

}  // namespace nn

}  // namespace retseg
