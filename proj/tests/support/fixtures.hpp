#pragma once

#include <string>
#include <vector>

#include "retseg/trainer.hpp"
#include "support/synthetic.hpp"

namespace fixtures {

/// Four synthetic vessel images used as both train and validation set.
inline std::vector<retseg::Sample> overfit_samples(int size = 64, int count = 4) {
  std::vector<retseg::Sample> s;
  for (int i = 0; i < count; ++i) {
    auto v = synthetic::vessel_image(size, 100 + i);
    s.push_back({v.image, v.mask, "synthetic" + std::to_string(i)});
  }
  return s;
}

/// Learning rate of the desk-scale overfit runs.
inline constexpr double kOverfitLearningRate = 3e-3;

}  // namespace fixtures
