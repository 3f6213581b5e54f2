#include "retseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace retseg {
namespace {

void check_finite(std::span<const float> v) {
  for (float x : v) require(std::isfinite(x), ErrorCode::NonFiniteValue, "non-finite pixel value");
}

// Source coordinate of output sample `i` under half-pixel-centre alignment.
double source_coord(int i, int in_size, int out_size) {
  return (i + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
}

}  // namespace

FloatField::FloatField(int width, int height, float fill)
    : Grid(width, height, std::vector<float>(static_cast<std::size_t>(width) * height, fill)) {
  require(std::isfinite(fill), ErrorCode::NonFiniteValue, "non-finite fill");
}

FloatField::FloatField(int width, int height, std::vector<float> data)
    : Grid(width, height, std::move(data)) {
  check_finite(data_);
}

GrayImage::GrayImage(int width, int height, float fill)
    : GrayImage(width, height, std::vector<float>(static_cast<std::size_t>(width) * height, fill)) {}

GrayImage::GrayImage(int width, int height, std::vector<float> data)
    : Grid(width, height, std::move(data)) {
  for (float v : data_) {
    require(std::isfinite(v), ErrorCode::NonFiniteValue, "non-finite intensity");
    if (v < 0.0f || v > 1.0f) fail(ErrorCode::InvalidArgument, "intensity " + std::to_string(v) + " outside [0,1]");
  }
}

GrayImage GrayImage::clamped(const FloatField& field) {
  std::vector<float> out(field.pixels().begin(), field.pixels().end());
  for (float& v : out) v = std::clamp(v, 0.0f, 1.0f);
  return GrayImage(field.width(), field.height(), std::move(out));
}

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill)
    : BinaryMask(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, fill)) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : Grid(width, height, std::move(data)) {
  for (auto v : data_) require(v <= 1, ErrorCode::InvalidArgument, "mask label not in {0,1}");
}

std::size_t BinaryMask::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

GrayImage BinaryMask::to_image() const {
  std::vector<float> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), [](std::uint8_t v) { return float(v); });
  return GrayImage(width_, height_, std::move(out));
}

BinaryMask threshold(const GrayImage& img, float threshold) {
  std::vector<std::uint8_t> out(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) out[i] = px[i] >= threshold ? 1 : 0;
  return BinaryMask(img.width(), img.height(), std::move(out));
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
  require(out_width >= 1 && out_height >= 1, ErrorCode::ZeroSizedTarget, "resize target must be at least 1x1");
  require(!img.empty(), ErrorCode::EmptyImage, "cannot resize an empty image");
  const int w = img.width(), h = img.height();

  // Precompute the horizontal taps once per column.
  std::vector<int> x0(out_width), x1(out_width);
  std::vector<double> tx(out_width);
  for (int x = 0; x < out_width; ++x) {
    double sx = std::clamp(source_coord(x, w, out_width), 0.0, double(w - 1));
    x0[x] = static_cast<int>(std::floor(sx));
    x1[x] = std::min(x0[x] + 1, w - 1);
    tx[x] = sx - x0[x];
  }

  std::vector<float> out(static_cast<std::size_t>(out_width) * out_height);
  for (int y = 0; y < out_height; ++y) {
    double sy = std::clamp(source_coord(y, h, out_height), 0.0, double(h - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, h - 1);
    double ty = sy - y0;
    for (int x = 0; x < out_width; ++x) {
      double top = img(x0[x], y0) * (1.0 - tx[x]) + img(x1[x], y0) * tx[x];
      double bot = img(x0[x], y1) * (1.0 - tx[x]) + img(x1[x], y1) * tx[x];
      double v = top * (1.0 - ty) + bot * ty;
      out[static_cast<std::size_t>(y) * out_width + x] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
    }
  }
  return GrayImage(out_width, out_height, std::move(out));
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_width, int out_height) {
  require(out_width >= 1 && out_height >= 1, ErrorCode::ZeroSizedTarget, "resize target must be at least 1x1");
  require(!mask.empty(), ErrorCode::EmptyImage, "cannot resize an empty mask");
  const int w = mask.width(), h = mask.height();
  auto nearest = [](int i, int in_size, int out_size) {
    // floor of the continuous source position; +0.5 shift of source_coord cancels
    int s = static_cast<int>(std::floor((i + 0.5) * static_cast<double>(in_size) / out_size));
    return std::clamp(s, 0, in_size - 1);
  };
  std::vector<std::uint8_t> out(static_cast<std::size_t>(out_width) * out_height);
  for (int y = 0; y < out_height; ++y) {
    int sy = nearest(y, h, out_height);
    for (int x = 0; x < out_width; ++x)
      out[static_cast<std::size_t>(y) * out_width + x] = mask(nearest(x, w, out_width), sy);
  }
  return BinaryMask(out_width, out_height, std::move(out));
}

}  // namespace retseg
