// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "skytrack/error.hpp"

namespace skytrack {

using Eigen::Matrix3d;
using Eigen::Vector3d;

// Physical constants of the quadrotor model. Yaw and its control input are
// identically zero by assumption and the propeller inertia is fixed at zero,
// so neither carries a field.
struct QuadParams {
  double m = 1.0;        // kg
  double Ix = 0.0081;    // kg m^2
  double Iy = 0.0081;    // kg m^2
  double Iz = 0.0142;    // kg m^2
  double g = 9.81;       // m/s^2
  double dt = 1.0 / 30;  // s

  static constexpr double Jtp = 0.0;  // propeller inertia, fixed
};

// Time-indexed 3D positions with a uniform timestep.
struct Trajectory {
  double dt = 1.0 / 30;
  std::vector<Vector3d> positions;

  int size() const { return static_cast<int>(positions.size()); }
};

struct LatentSample {
  double phi = 0.0;    // roll, rad
  double theta = 0.0;  // pitch, rad
  double u = 0.0;      // throttle, N
};

// Per-timestep roll/pitch/throttle of the whole flight.
struct LatentSequence {
  std::vector<double> phi;
  std::vector<double> theta;
  std::vector<double> u;

  int size() const { return static_cast<int>(phi.size()); }
  LatentSample at(int t) const { return {phi[t], theta[t], u[t]}; }
  void push_back(const LatentSample& s) {
    phi.push_back(s.phi);
    theta.push_back(s.theta);
    u.push_back(s.u);
  }
  void resize(int n) {
    phi.resize(n);
    theta.resize(n);
    u.resize(n);
  }
};

struct InitialState {
  Vector3d x0 = Vector3d::Zero();  // m
  Vector3d v0 = Vector3d::Zero();  // m/s
};

// Torque-level commands derived from the body rates.
struct ControlSequence {
  std::vector<double> u_phi;    // N m
  std::vector<double> u_theta;  // N m

  int size() const { return static_cast<int>(u_phi.size()); }
};

// Which inversion to use for the pitch angle. kSelfConsistent divides the
// normalized x-acceleration by cos(phi), which makes the latent -> accel map
// an exact inverse. kAsPrinted multiplies instead and is kept only for
// comparison; it does not round-trip.
enum class PitchForm { kSelfConsistent, kAsPrinted };

// Acceleration produced by a latent sample. Throws NonPositiveThrust.
Vector3d accel_from_latent(const LatentSample& latent, const QuadParams& params);

// Same formula without the thrust check; used where trial states may move
// the throttle through zero and must still evaluate.
Vector3d accel_from_latent_unchecked(const LatentSample& latent,
                                     const QuadParams& params);

// d(accel)/d(phi, theta, u), column per latent component.
Matrix3d accel_jacobian(const LatentSample& latent, const QuadParams& params);

// Inverts accel_from_latent. Throws FreeFall when the required thrust
// magnitude falls below 1e-9.
LatentSample latent_from_accel(const Vector3d& accel, const QuadParams& params,
                               PitchForm form = PitchForm::kSelfConsistent);

// G: trajectory -> latent sequence (plus the initial state), forward
// differences matching the Euler recursion. The two trailing entries repeat
// the last computable value so the latent length equals the trajectory's.
std::pair<LatentSequence, InitialState> trajectory_to_latent(
    const Trajectory& trajectory, const QuadParams& params);

// F: latent sequence -> trajectory by explicit Euler integration.
Trajectory latent_to_trajectory(const LatentSequence& latent,
                                const InitialState& initial,
                                const QuadParams& params);

// Discrete Gaussian smoothing of a scalar series: kernel truncated at
// +-3 sigma, normalized to sum 1, mirror padding at the boundaries.
// sigma = 0 returns the input unchanged.
std::vector<double> smooth_series(const std::vector<double>& values,
                                  double sigma);

// Normalized truncated Gaussian kernel (odd length 2*ceil(3 sigma)+1).
std::vector<double> gaussian_kernel(double sigma);

// H: channel-wise smoothing of the latent sequence.
LatentSequence smooth_latent(const LatentSequence& latent, double sigma);

// Angular velocity estimate per timestep; |sin(phi)| is clamped to 1e-3
// (sign preserving) to keep the expression defined at level flight. The
// first entry duplicates the first computable one.
std::vector<Vector3d> body_rates(const LatentSequence& latent,
                                 const QuadParams& params);

// Control inputs from precomputed body rates; the first two entries
// duplicate the first computable value.
ControlSequence control_inputs_from_rates(const std::vector<Vector3d>& rates,
                                          const QuadParams& params);

ControlSequence control_inputs(const LatentSequence& latent,
                               const QuadParams& params);

}  // namespace skytrack
