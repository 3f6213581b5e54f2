#pragma once

#include <string>
#include <vector>

#include "retseg/image.hpp"

namespace retseg {

enum class FlipAxis {
  Horizontal,  ///< reverse column order
  Vertical,    ///< reverse row order
};

template <class Img>
Img flip(const Img& img, FlipAxis axis) {
  const int w = img.width(), h = img.height();
  std::vector<typename Img::value_type> out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = axis == FlipAxis::Horizontal ? w - 1 - x : x;
      const int sy = axis == FlipAxis::Vertical ? h - 1 - y : y;
      out[static_cast<std::size_t>(y) * w + x] = img(sx, sy);
    }
  return Img(w, h, std::move(out));
}

/// Rotation about the image centre, positive angles counter-clockwise as
/// displayed (y axis pointing down). Same output size; samples whose source
/// falls outside the frame are 0. Bilinear interpolation.
GrayImage rotate(const GrayImage& img, double degrees);

/// As rotate(), nearest-neighbour so labels stay binary.
BinaryMask rotate_mask(const BinaryMask& mask, double degrees);

/// "rot15", "rot-7.5", ...
std::string rotation_tag(double degrees);

struct AugmentedPair {
  GrayImage image;
  BinaryMask mask;
  std::string transform;
};

/// The three variants of one original: hflip, vflip, rot<deg>. The same
/// geometric transform is applied to image and mask.
std::vector<AugmentedPair> augment_pair(const GrayImage& image, const BinaryMask& mask, double rotation_degrees);

}  // namespace retseg
