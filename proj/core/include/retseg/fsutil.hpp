#pragma once

#include <filesystem>
#include <system_error>

#include "retseg/error.hpp"

namespace retseg {

/// create_directories that reports failure as WriteFailure.
inline void make_directories(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::WriteFailure, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace retseg
