#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace retseg {

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path mask;
  int origin_id = 0;            // index of the source original
  std::string transform = "orig";

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using DatasetManifest = std::vector<ManifestEntry>;

struct SplitCounts {
  std::size_t train = 80;
  std::size_t val = 20;
  std::size_t test = 20;

  std::size_t total() const noexcept { return train + val + test; }
};

struct SplitManifest {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;
  std::uint64_t seed = 0;
  bool grouped = false;
};

/// Pairs `<root>/images/*` with `<root>/masks/*` by sorted filename order.
/// Accepted extensions: .png .pgm .ppm (images), .png .pgm (masks).
DatasetManifest scan_dataset(const std::filesystem::path& root);

/// Loads each original, writes `<stem>__hflip`, `__vflip`, `__rot<deg>` PNGs into
/// `<out_dir>/images` and `<out_dir>/masks`, and returns exactly 3 entries per
/// original (originals themselves are not included).
DatasetManifest augment_dataset(const DatasetManifest& originals, double rotation_degrees,
                                const std::filesystem::path& out_dir);

/// Seeded shuffle then partition into (train, val, test). With `grouped`, whole
/// origin groups are shuffled and kept together; every count must then be a
/// multiple of the group size.
SplitManifest split_dataset(const DatasetManifest& manifest, const SplitCounts& counts, std::uint64_t seed,
                            bool grouped = false);

/// JSON array of {image, mask, origin_id, transform}; paths are written relative
/// to the manifest's directory and resolved against it on load.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);
DatasetManifest load_manifest(const std::filesystem::path& file);

void save_split(const SplitManifest& split, const std::filesystem::path& file);
SplitManifest load_split(const std::filesystem::path& file);

}  // namespace retseg
