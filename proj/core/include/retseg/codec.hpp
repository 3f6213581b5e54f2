#pragma once

#include <filesystem>
#include <optional>
#include <utility>

#include "retseg/image.hpp"

namespace retseg {

/// How an RGB source collapses to one channel.
enum class GrayMode {
  GreenChannel,  ///< vessels have the highest contrast in green
  Luminance,     ///< Rec.601 weights 0.299 R + 0.587 G + 0.114 B
};

/// Decodes PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette), binary PGM (P5)
/// or binary PPM (P6). The format is sniffed from the file's magic bytes.
GrayImage load_image(const std::filesystem::path& path, GrayMode mode = GrayMode::GreenChannel);

/// Loads a grayscale image and binarizes with `value >= threshold`. When
/// `resize_to` is given the binary mask is resampled nearest-neighbour.
BinaryMask load_mask(const std::filesystem::path& path, float threshold = 0.5f,
                     std::optional<std::pair<int, int>> resize_to = std::nullopt);

/// Writes an 8-bit grayscale file; `.pgm` gives binary PGM, anything else PNG.
void save_image(const GrayImage& img, const std::filesystem::path& path);
void save_image(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace retseg
