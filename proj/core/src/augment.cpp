#include "retseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace retseg {
namespace {

constexpr double kEdgeSlack = 1e-6;

struct Rotation {
  double cx, cy, c, s;

  Rotation(int w, int h, double degrees)
      : cx((w - 1) / 2.0), cy((h - 1) / 2.0),
        c(std::cos(degrees * std::numbers::pi / 180.0)),
        s(std::sin(degrees * std::numbers::pi / 180.0)) {}

  // Inverse map: output pixel -> source position. With y down, a counter-clockwise
  // display rotation by t maps source (u,v) to (c*u + s*v, -s*u + c*v).
  std::pair<double, double> source(int x, int y) const {
    const double dx = x - cx, dy = y - cy;
    return {cx + c * dx - s * dy, cy + s * dx + c * dy};
  }
};

}  // namespace

GrayImage rotate(const GrayImage& img, double degrees) {
  require(std::isfinite(degrees), ErrorCode::InvalidArgument, "rotation angle must be finite");
  const int w = img.width(), h = img.height();
  const Rotation rot(w, h, degrees);
  std::vector<float> out(img.size(), 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto [sx, sy] = rot.source(x, y);
      if (sx < -kEdgeSlack || sy < -kEdgeSlack || sx > w - 1 + kEdgeSlack || sy > h - 1 + kEdgeSlack) continue;
      sx = std::clamp(sx, 0.0, double(w - 1));
      sy = std::clamp(sy, 0.0, double(h - 1));
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double tx = sx - x0, ty = sy - y0;
      const double v = (img(x0, y0) * (1 - tx) + img(x1, y0) * tx) * (1 - ty) +
                       (img(x0, y1) * (1 - tx) + img(x1, y1) * tx) * ty;
      out[static_cast<std::size_t>(y) * w + x] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
    }
  return GrayImage(w, h, std::move(out));
}

BinaryMask rotate_mask(const BinaryMask& mask, double degrees) {
  require(std::isfinite(degrees), ErrorCode::InvalidArgument, "rotation angle must be finite");
  const int w = mask.width(), h = mask.height();
  const Rotation rot(w, h, degrees);
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto [sx, sy] = rot.source(x, y);
      const long nx = std::lround(sx), ny = std::lround(sy);
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      out[static_cast<std::size_t>(y) * w + x] = mask(static_cast<int>(nx), static_cast<int>(ny));
    }
  return BinaryMask(w, h, std::move(out));
}

std::string rotation_tag(double degrees) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rot%g", degrees);
  return buf;
}

std::vector<AugmentedPair> augment_pair(const GrayImage& image, const BinaryMask& mask, double rotation_degrees) {
  require(image.width() == mask.width() && image.height() == mask.height(), ErrorCode::PairDimensionMismatch,
          "image and mask dimensions differ");
  std::vector<AugmentedPair> out;
  out.push_back({flip(image, FlipAxis::Horizontal), flip(mask, FlipAxis::Horizontal), "hflip"});
  out.push_back({flip(image, FlipAxis::Vertical), flip(mask, FlipAxis::Vertical), "vflip"});
  out.push_back({rotate(image, rotation_degrees), rotate_mask(mask, rotation_degrees), rotation_tag(rotation_degrees)});
  return out;
}

}  // namespace retseg
