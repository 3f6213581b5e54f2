#pragma once

#include <doctest.h>

#include <optional>

#include "retseg/error.hpp"

namespace testing_support {

/// Error code raised by `fn`, or nullopt when it returns normally.
template <class Fn>
std::optional<retseg::ErrorCode> code_of(Fn&& fn) {
  try {
    fn();
  } catch (const retseg::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing_support

#define CHECK_ERROR(expr, expected) CHECK(::testing_support::code_of([&] { (void)(expr); }) == (expected))
