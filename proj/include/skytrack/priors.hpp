// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "skytrack/dynamics.hpp"

namespace skytrack {

// The regularizer families the solver can run with.
enum class PriorKind { kNone, kGaussianSmooth, kSplineSmooth, kKalmanCA, kDynamics };

std::string prior_kind_name(PriorKind kind);
PriorKind parse_prior_kind(const std::string& name);

struct PriorConfig {
  PriorKind kind = PriorKind::kNone;
  double sigma = 1.1;          // Gaussian smoothing, samples
  int knot_spacing = 10;       // spline knots, samples
  double kalman_q = 1.0;       // process noise, (m/s^3)^2
  double kalman_r = 0.05;      // measurement noise, m^2
  double sigma_latent = 1.1;   // latent smoothing, samples
};

// Targets produced from the previous outer-iteration trajectory. Position
// targets drive the Eq.-4-style priors; latent targets drive the dynamics
// prior's anchors. Lengths always equal the trajectory length when present.
struct PriorTargets {
  std::vector<Vector3d> positions;  // empty when unused
  LatentSequence latent;            // empty when unused
  InitialState latent_initial;      // initial state paired with `latent`
  double lambda = 0.0;              // overall prior weight used by the run
};

// Channel-wise Gaussian smoothing of the previous trajectory.
PriorTargets gaussian_targets(const Trajectory& previous, double sigma);

// Least-squares uniform cubic B-spline fit, evaluated back at the samples.
// Throws InsufficientSamples when the trajectory has fewer than 4 points.
PriorTargets spline_targets(const Trajectory& previous, int knot_spacing);

// One-step predictions of a forward constant-acceleration Kalman filter run
// over the previous trajectory as measurements; target[0] is the first
// trajectory point itself.
PriorTargets kalman_targets(const Trajectory& previous, double q, double r);

// Smoothed latent targets for the dynamics prior: latent = H(G(previous)),
// positions = F(latent, initial state from G) for reporting.
PriorTargets dynamics_targets(const Trajectory& previous,
                              const QuadParams& params, double sigma_latent);

// Dispatch on config.kind; kNone yields empty targets.
PriorTargets make_prior_targets(const Trajectory& previous,
                                const QuadParams& params,
                                const PriorConfig& config);

}  // namespace skytrack
