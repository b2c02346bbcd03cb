// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "amii/error.hpp"

namespace amii::train {

/// Triangular cyclical learning rate.
struct ClrSchedule {
  double base_lr = 1e-7;
  double max_lr = 1e-3;
  std::uint64_t step_size = 1;  // iterations per half cycle

  void validate() const {
    if (!(base_lr < max_lr)) throw ConfigError("clr: base_lr must be below max_lr");
    if (step_size < 1) throw ConfigError("clr: step size must be >= 1 iteration");
  }
};

/// Half-cycle length when the step size is given as a multiple of epochs.
inline std::uint64_t clr_step_size(std::uint64_t iters_per_epoch, double step_factor) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(step_factor * static_cast<double>(iters_per_epoch))));
}

/// base + (max - base) * max(0, 1 - |iter/step - 2*floor(1 + iter/(2*step)) + 1|).
/// The position on the triangle is found in integers and the rate is a convex
/// blend, so endpoints and every point in between come out exactly.
inline double clr_lr(std::uint64_t iter, const ClrSchedule& s) {
  const std::uint64_t step = std::max<std::uint64_t>(1, s.step_size);
  const std::uint64_t phase = iter % (2 * step);
  const std::uint64_t up = phase <= step ? phase : 2 * step - phase;
  const double w = static_cast<double>(up) / static_cast<double>(step);
  return (1.0 - w) * s.base_lr + w * s.max_lr;
}

}  // namespace amii::train
