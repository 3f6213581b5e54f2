#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "retseg/error.hpp"

namespace retseg {

/// Dense row-major 2-D grid. Base for the three pixel types below; derived
/// classes add their own value invariants at construction.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T operator()(int x, int y) const { return data_[index(x, y)]; }
  std::span<const T> pixels() const noexcept { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 protected:
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(width >= 0 && height >= 0, ErrorCode::InvalidArgument, "negative grid dimension");
    require(data_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
            ErrorCode::ShapeMismatch, "grid data length does not match width*height");
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Unconstrained finite float plane: convolution and gradient responses.
class FloatField : public Grid<float> {
 public:
  FloatField() = default;
  FloatField(int width, int height, float fill = 0.0f);
  FloatField(int width, int height, std::vector<float> data);

  float& at(int x, int y) { return data_[index(x, y)]; }
  std::span<float> mutable_pixels() noexcept { return data_; }
};

/// Intensity image with every sample in [0,1].
class GrayImage : public Grid<float> {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, float fill);
  GrayImage(int width, int height, std::vector<float> data);

  /// Clamps every sample of `field` into [0,1].
  static GrayImage clamped(const FloatField& field);
  FloatField to_field() const { return FloatField(width_, height_, data_); }
};

/// Vessel labels, exactly 0 or 1 per pixel.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, std::uint8_t fill = 0);
  BinaryMask(int width, int height, std::vector<std::uint8_t> data);

  std::size_t count_ones() const noexcept;
  /// Mask as a {0,1}-valued intensity image.
  GrayImage to_image() const;
};

/// Pixel-wise `value >= threshold`.
BinaryMask threshold(const GrayImage& img, float threshold);

/// Bilinear resampling, half-pixel-centre alignment, output clamped to [0,1].
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

/// Nearest-neighbour resampling (same half-pixel-centre mapping); keeps labels binary.
BinaryMask resize_nearest(const BinaryMask& mask, int out_width, int out_height);

/// Swap rows and columns.
template <class Img>
Img transpose(const Img& img) {
  std::vector<typename Img::value_type> out(img.size());
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(x) * h + y] = img(x, y);
  return Img(h, w, std::move(out));
}

}  // namespace retseg
