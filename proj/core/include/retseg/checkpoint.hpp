#pragma once

#include <filesystem>
#include <optional>

#include "retseg/adam.hpp"
#include "retseg/unet.hpp"

namespace retseg {

/// On-disk layout (all integers little-endian):
///   "RSEG" | u32 version | u64 header_len | header JSON | f32 blobs
/// The header lists config, seed, optional Adam hyperparameters and step, and
/// every tensor as {name, shape, offset, count}; offsets are in bytes from the
/// start of the blob section, in header order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  UNet<float> model;
  std::optional<AdamState<float>> adam;
};

void save_checkpoint(const UNet<float>& model, const AdamState<float>* adam, const std::filesystem::path& path);

/// Throws CorruptCheckpoint (bad magic, version, length) or ShapeHeaderMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace retseg
