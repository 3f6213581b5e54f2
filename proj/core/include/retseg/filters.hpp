#pragma once

#include <vector>

#include "retseg/image.hpp"

namespace retseg {

/// Square kernel of side 2r+1, weights row-major: row index is the vertical
/// offset dy, column index the horizontal offset dx, both in [-r, r].
class Kernel2D {
 public:
  Kernel2D(int radius, std::vector<float> weights);

  static Kernel2D identity() { return Kernel2D(0, {1.0f}); }

  int radius() const noexcept { return radius_; }
  int side() const noexcept { return 2 * radius_ + 1; }
  float at(int dx, int dy) const { return weights_[static_cast<std::size_t>(dy + radius_) * side() + (dx + radius_)]; }
  const std::vector<float>& weights() const noexcept { return weights_; }

 private:
  int radius_;
  std::vector<float> weights_;
};

enum class Border { Replicate, Reflect };

/// Maps an out-of-range index back into [0, n) per the border rule.
/// Reflect mirrors about the edge including the edge sample (dcba|abcd).
int border_index(int i, int n, Border border);

/// out(x,y) = sum_{dx,dy} k(dx,dy) * img(x-dx, y-dy); kernel visited row-major.
/// Output is not clamped.
FloatField convolve2d(const FloatField& img, const Kernel2D& kernel, Border border = Border::Replicate);
FloatField convolve2d(const GrayImage& img, const Kernel2D& kernel, Border border = Border::Replicate);

struct GaussianParams {
  double sigma = 1.0;
  int radius = 3;

  /// radius = ceil(3 sigma)
  static GaussianParams with_sigma(double sigma);
  void validate() const;
};

/// w(dx,dy) proportional to exp(-(dx^2+dy^2) / (2 sigma^2)), normalized to sum 1.
Kernel2D gaussian_kernel(const GaussianParams& params);

/// Separable blur, replicate borders, clamped to [0,1]. Agrees with
/// convolve2d(img, gaussian_kernel(p)) to ~1e-6, and commutes exactly with
/// flips because mirrored taps are summed pairwise.
GrayImage gaussian_blur(const GrayImage& img, const GaussianParams& params);

struct GaborParams {
  double wavelength = 8.0;  // pixels
  double orientation = 0.0; // radians
  double sigma = 3.0;       // envelope, pixels
  double aspect = 0.5;      // gamma
  double phase = 0.0;       // psi, radians
  int radius = 9;

  void validate() const;
};

/// Real even Gabor: exp(-(x'^2 + g^2 y'^2) / (2 s^2)) * cos(2 pi x' / l + psi)
/// with x' = x cos t + y sin t, y' = -x sin t + y cos t. Not normalized.
Kernel2D gabor_kernel(const GaborParams& params);

/// `orientations` kernels at t = k pi / orientations sharing the other parameters of `base`.
std::vector<GaborParams> gabor_bank(const GaborParams& base = {}, int orientations = 8);

/// Per-pixel maximum of the bank's convolution responses (before rescaling).
FloatField gabor_max_response(const GrayImage& img, const std::vector<GaborParams>& bank);

/// gabor_max_response min-max rescaled to [0,1]; all zeros when the response is flat.
GrayImage gabor_response(const GrayImage& img, const std::vector<GaborParams>& bank);

/// sqrt(gx^2 + gy^2) from the 3x3 Sobel pair with replicate borders; unclamped.
FloatField sobel_magnitude(const GrayImage& img);

struct SobelPruneParams {
  double edge_threshold = 0.15;  // fraction of max gradient magnitude
  int spur_iterations = 3;

  void validate() const;
};

/// Number of 8-connected foreground neighbours of (x,y); outside the frame counts as 0.
int foreground_neighbors(const BinaryMask& mask, int x, int y);

/// Each iteration simultaneously deletes every foreground pixel with at most
/// one 8-connected foreground neighbour.
BinaryMask prune_spurs(const BinaryMask& edges, int iterations);

/// Sobel magnitude, binarized at edge_threshold * max (empty when max is 0),
/// then spur-pruned. Output values are exactly 0 or 1.
GrayImage sobel_prune(const GrayImage& img, const SobelPruneParams& params);

}  // namespace retseg
