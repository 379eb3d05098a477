// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "skytrack/error.hpp"

namespace skytrack {

enum class LossKind { kSquared, kHuber };

// Robust cost on the squared norm of a residual, in the usual convention:
// rho(s) with s = |r|^2. Squared: rho(s) = s. Huber: quadratic inside the
// scale delta, linear in |r| outside. Both are C1, nonnegative, and zero at
// zero.
struct RobustLoss {
  LossKind kind = LossKind::kSquared;
  double delta = 1.0;

  static RobustLoss squared() { return {LossKind::kSquared, 1.0}; }
  static RobustLoss huber(double delta) {
    if (delta <= 0.0) {
      throw Error("Huber scale must be positive");
    }
    return {LossKind::kHuber, delta};
  }

  double operator()(double squared_norm) const {
    if (kind == LossKind::kSquared) {
      return squared_norm;
    }
    const double d2 = delta * delta;
    if (squared_norm <= d2) {
      return squared_norm;
    }
    return 2.0 * delta * std::sqrt(squared_norm) - d2;
  }

  // d rho / d s; the IRLS weight applied to J^T J and J^T r.
  double weight(double squared_norm) const {
    if (kind == LossKind::kSquared) {
      return 1.0;
    }
    const double d2 = delta * delta;
    if (squared_norm <= d2) {
      return 1.0;
    }
    return delta / std::sqrt(squared_norm);
  }

  // Score assigned to a hypothesis that cannot be projected at all (point
  // behind the camera): the loss of a 1e4 px residual, far beyond anything
  // an in-view candidate produces.
  double saturation() const { return (*this)(1e8); }
};

}  // namespace skytrack
