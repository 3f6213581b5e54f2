#include "retseg/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace retseg {
namespace {

std::vector<double> gaussian_taps(const GaussianParams& p) {
  // 1-D factor of the 2-D kernel, normalized the same way.
  std::vector<double> taps(2 * p.radius + 1);
  double sum = 0.0;
  for (int i = -p.radius; i <= p.radius; ++i) {
    taps[i + p.radius] = std::exp(-(i * i) / (2.0 * p.sigma * p.sigma));
    sum += taps[i + p.radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// One separable pass along rows (horizontal == true) or columns. Mirrored taps are
// added pairwise so the result is exactly symmetric under flips.
std::vector<double> symmetric_pass(const std::vector<double>& src, int w, int h, const std::vector<double>& taps,
                                   bool horizontal) {
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<double> dst(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto sample = [&](int off) {
        int sx = horizontal ? std::clamp(x + off, 0, w - 1) : x;
        int sy = horizontal ? y : std::clamp(y + off, 0, h - 1);
        return src[static_cast<std::size_t>(sy) * w + sx];
      };
      double acc = taps[r] * sample(0);
      for (int i = 1; i <= r; ++i) acc += taps[r + i] * (sample(-i) + sample(i));
      dst[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return dst;
}

}  // namespace

Kernel2D::Kernel2D(int radius, std::vector<float> weights) : radius_(radius), weights_(std::move(weights)) {
  require(radius >= 0, ErrorCode::InvalidArgument, "kernel radius must be >= 0");
  require(weights_.size() == static_cast<std::size_t>(side()) * side(), ErrorCode::ShapeMismatch,
          "kernel weights must be (2r+1)^2");
  for (float w : weights_) require(std::isfinite(w), ErrorCode::NonFiniteValue, "non-finite kernel weight");
}

int border_index(int i, int n, Border border) {
  if (i >= 0 && i < n) return i;
  if (border == Border::Replicate || n == 1) return std::clamp(i, 0, n - 1);
  // symmetric reflection with period 2n
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

FloatField convolve2d(const FloatField& img, const Kernel2D& kernel, Border border) {
  require(!img.empty(), ErrorCode::EmptyImage, "convolve2d on empty image");
  const int w = img.width(), h = img.height(), r = kernel.radius(), side = kernel.side();

  // column lookup per horizontal offset: cols[(dx + r) * w + x] = source column of x - dx
  std::vector<int> cols(static_cast<std::size_t>(side) * w);
  for (int dx = -r; dx <= r; ++dx)
    for (int x = 0; x < w; ++x) cols[static_cast<std::size_t>(dx + r) * w + x] = border_index(x - dx, w, border);

  const auto src = img.pixels();
  const auto& wts = kernel.weights();
  std::vector<float> out(img.size());
  std::vector<double> acc(w);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int dy = -r; dy <= r; ++dy) {
      const float* row = src.data() + static_cast<std::size_t>(border_index(y - dy, h, border)) * w;
      for (int dx = -r; dx <= r; ++dx) {
        const double k = wts[static_cast<std::size_t>(dy + r) * side + (dx + r)];
        const int* cx = cols.data() + static_cast<std::size_t>(dx + r) * w;
        for (int x = 0; x < w; ++x) acc[x] += k * row[cx[x]];
      }
    }
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc[x]);
  }
  return FloatField(w, h, std::move(out));
}

FloatField convolve2d(const GrayImage& img, const Kernel2D& kernel, Border border) {
  require(!img.empty(), ErrorCode::EmptyImage, "convolve2d on empty image");
  return convolve2d(img.to_field(), kernel, border);
}

GaussianParams GaussianParams::with_sigma(double sigma) {
  return GaussianParams{sigma, std::max(1, static_cast<int>(std::ceil(3.0 * sigma)))};
}

void GaussianParams::validate() const {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::ConfigInvalid, "gaussian sigma must be > 0");
  require(radius >= 1, ErrorCode::ConfigInvalid, "gaussian radius must be >= 1");
}

Kernel2D gaussian_kernel(const GaussianParams& p) {
  p.validate();
  const int side = 2 * p.radius + 1;
  std::vector<double> raw(static_cast<std::size_t>(side) * side);
  double sum = 0.0;
  for (int dy = -p.radius; dy <= p.radius; ++dy)
    for (int dx = -p.radius; dx <= p.radius; ++dx) {
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
      raw[static_cast<std::size_t>(dy + p.radius) * side + (dx + p.radius)] = v;
      sum += v;
    }
  std::vector<float> weights(raw.size());
  std::transform(raw.begin(), raw.end(), weights.begin(), [sum](double v) { return static_cast<float>(v / sum); });
  return Kernel2D(p.radius, std::move(weights));
}

GrayImage gaussian_blur(const GrayImage& img, const GaussianParams& p) {
  p.validate();
  require(!img.empty(), ErrorCode::EmptyImage, "gaussian_blur on empty image");
  const auto taps = gaussian_taps(p);
  std::vector<double> buf(img.pixels().begin(), img.pixels().end());
  buf = symmetric_pass(buf, img.width(), img.height(), taps, true);
  buf = symmetric_pass(buf, img.width(), img.height(), taps, false);
  std::vector<float> out(buf.size());
  std::transform(buf.begin(), buf.end(), out.begin(),
                 [](double v) { return std::clamp(static_cast<float>(v), 0.0f, 1.0f); });
  return GrayImage(img.width(), img.height(), std::move(out));
}

void GaborParams::validate() const {
  require(std::isfinite(wavelength) && wavelength > 0.0, ErrorCode::ConfigInvalid, "gabor wavelength must be > 0");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::ConfigInvalid, "gabor sigma must be > 0");
  require(std::isfinite(aspect) && aspect > 0.0, ErrorCode::ConfigInvalid, "gabor aspect must be > 0");
  require(std::isfinite(orientation) && std::isfinite(phase), ErrorCode::ConfigInvalid, "gabor angles must be finite");
  require(radius >= 0, ErrorCode::ConfigInvalid, "gabor radius must be >= 0");
}

Kernel2D gabor_kernel(const GaborParams& p) {
  p.validate();
  const int side = 2 * p.radius + 1;
  const double c = std::cos(p.orientation), s = std::sin(p.orientation);
  std::vector<float> weights(static_cast<std::size_t>(side) * side);
  for (int y = -p.radius; y <= p.radius; ++y)
    for (int x = -p.radius; x <= p.radius; ++x) {
      const double xr = x * c + y * s;
      const double yr = -x * s + y * c;
      const double envelope = std::exp(-(xr * xr + p.aspect * p.aspect * yr * yr) / (2.0 * p.sigma * p.sigma));
      const double carrier = std::cos(2.0 * std::numbers::pi * xr / p.wavelength + p.phase);
      weights[static_cast<std::size_t>(y + p.radius) * side + (x + p.radius)] = static_cast<float>(envelope * carrier);
    }
  return Kernel2D(p.radius, std::move(weights));
}

std::vector<GaborParams> gabor_bank(const GaborParams& base, int orientations) {
  require(orientations >= 1, ErrorCode::ConfigInvalid, "gabor bank needs at least one orientation");
  std::vector<GaborParams> bank;
  bank.reserve(orientations);
  for (int k = 0; k < orientations; ++k) {
    GaborParams p = base;
    p.orientation = k * std::numbers::pi / orientations;
    bank.push_back(p);
  }
  return bank;
}

FloatField gabor_max_response(const GrayImage& img, const std::vector<GaborParams>& bank) {
  require(!bank.empty(), ErrorCode::EmptyBank, "gabor bank is empty");
  require(!img.empty(), ErrorCode::EmptyImage, "gabor_response on empty image");
  const FloatField field = img.to_field();
  FloatField best = convolve2d(field, gabor_kernel(bank.front()));
  for (std::size_t k = 1; k < bank.size(); ++k) {
    FloatField resp = convolve2d(field, gabor_kernel(bank[k]));
    auto dst = best.mutable_pixels();
    auto src = resp.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], src[i]);
  }
  return best;
}

GrayImage gabor_response(const GrayImage& img, const std::vector<GaborParams>& bank) {
  FloatField resp = gabor_max_response(img, bank);
  auto px = resp.pixels();
  auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  const float mn = *lo, mx = *hi;
  std::vector<float> out(px.size(), 0.0f);
  if (mx > mn) {
    const double range = static_cast<double>(mx) - mn;
    for (std::size_t i = 0; i < px.size(); ++i)
      out[i] = std::clamp(static_cast<float>((px[i] - static_cast<double>(mn)) / range), 0.0f, 1.0f);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

FloatField sobel_magnitude(const GrayImage& img) {
  require(!img.empty(), ErrorCode::EmptyImage, "sobel_magnitude on empty image");
  const int w = img.width(), h = img.height();
  std::vector<float> out(img.size());
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      // a[row][col] of the 3x3 neighbourhood
      const double a00 = img(xm, ym), a01 = img(x, ym), a02 = img(xp, ym);
      const double a10 = img(xm, y), a12 = img(xp, y);
      const double a20 = img(xm, yp), a21 = img(x, yp), a22 = img(xp, yp);
      // gy is gx with rows and columns swapped, so transposing the image swaps them exactly
      const double gx = (a02 - a00) + 2.0 * (a12 - a10) + (a22 - a20);
      const double gy = (a20 - a00) + 2.0 * (a21 - a01) + (a22 - a02);
      out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return FloatField(w, h, std::move(out));
}

void SobelPruneParams::validate() const {
  require(edge_threshold >= 0.0 && edge_threshold <= 1.0, ErrorCode::ConfigInvalid,
          "sobel edge_threshold must lie in [0,1]");
  require(spur_iterations >= 0, ErrorCode::ConfigInvalid, "spur_iterations must be >= 0");
}

int foreground_neighbors(const BinaryMask& mask, int x, int y) {
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (nx >= 0 && nx < mask.width() && ny >= 0 && ny < mask.height()) n += mask(nx, ny);
    }
  return n;
}

BinaryMask prune_spurs(const BinaryMask& edges, int iterations) {
  require(iterations >= 0, ErrorCode::InvalidArgument, "negative pruning iterations");
  BinaryMask current = edges;
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::uint8_t> next(current.pixels().begin(), current.pixels().end());
    bool changed = false;
    for (int y = 0; y < current.height(); ++y)
      for (int x = 0; x < current.width(); ++x)
        if (current(x, y) && foreground_neighbors(current, x, y) <= 1) {
          next[static_cast<std::size_t>(y) * current.width() + x] = 0;
          changed = true;
        }
    if (!changed) break;
    current = BinaryMask(current.width(), current.height(), std::move(next));
  }
  return current;
}

GrayImage sobel_prune(const GrayImage& img, const SobelPruneParams& p) {
  p.validate();
  const FloatField mag = sobel_magnitude(img);
  const auto px = mag.pixels();
  const float peak = *std::max_element(px.begin(), px.end());
  std::vector<std::uint8_t> edges(px.size(), 0);
  if (peak > 0.0f) {
    const double cut = p.edge_threshold * peak;
    for (std::size_t i = 0; i < px.size(); ++i) edges[i] = px[i] >= cut ? 1 : 0;
  }
  return prune_spurs(BinaryMask(img.width(), img.height(), std::move(edges)), p.spur_iterations).to_image();
}

}  // namespace retseg
