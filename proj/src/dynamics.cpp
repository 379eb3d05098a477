// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skytrack {

namespace {

constexpr double kFreeFallThrust = 1e-9;  // N
constexpr double kSinPhiClamp = 1e-3;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Mirror reflection about the edge samples, valid for any offset.
int reflect_index(int i, int n) {
  if (n == 1) {
    return 0;
  }
  const int period = 2 * (n - 1);
  int m = i % period;
  if (m < 0) {
    m += period;
  }
  return m < n ? m : period - m;
}

}  // namespace

Vector3d accel_from_latent_unchecked(const LatentSample& latent,
                                     const QuadParams& params) {
  const double sp = std::sin(latent.phi);
  const double cp = std::cos(latent.phi);
  const double st = std::sin(latent.theta);
  const double ct = std::cos(latent.theta);
  const double a = latent.u / params.m;
  return Vector3d(st * cp * a, -sp * a, ct * cp * a - params.g);
}

Vector3d accel_from_latent(const LatentSample& latent,
                           const QuadParams& params) {
  if (latent.u <= 0.0) {
    throw NonPositiveThrust("throttle must be positive, got " +
                            std::to_string(latent.u));
  }
  return accel_from_latent_unchecked(latent, params);
}

Matrix3d accel_jacobian(const LatentSample& latent, const QuadParams& params) {
  const double sp = std::sin(latent.phi);
  const double cp = std::cos(latent.phi);
  const double st = std::sin(latent.theta);
  const double ct = std::cos(latent.theta);
  const double a = latent.u / params.m;
  Matrix3d J;
  // columns: d/dphi, d/dtheta, d/du
  J.col(0) = Vector3d(-st * sp * a, -cp * a, -ct * sp * a);
  J.col(1) = Vector3d(ct * cp * a, 0.0, -st * cp * a);
  J.col(2) = Vector3d(st * cp / params.m, -sp / params.m, ct * cp / params.m);
  return J;
}

LatentSample latent_from_accel(const Vector3d& accel, const QuadParams& params,
                               PitchForm form) {
  const Vector3d thrust_dir(accel.x(), accel.y(), accel.z() + params.g);
  const double u = params.m * thrust_dir.norm();
  if (u < kFreeFallThrust) {
    throw FreeFall("acceleration is indistinguishable from free fall");
  }
  const double phi = std::asin(clamp_unit(-accel.y() * params.m / u));
  const double cp = std::cos(phi);
  double theta = 0.0;
  if (form == PitchForm::kSelfConsistent) {
    const double denom = std::max(cp, 1e-12);
    theta = std::asin(clamp_unit(accel.x() * params.m / (u * denom)));
  } else {
    theta = std::asin(clamp_unit(accel.x() * params.m / u * cp));
  }
  return {phi, theta, u};
}

std::pair<LatentSequence, InitialState> trajectory_to_latent(
    const Trajectory& trajectory, const QuadParams& params) {
  const int t_count = trajectory.size();
  if (t_count < 3) {
    throw InsufficientSamples("trajectory needs at least 3 points, got " +
                              std::to_string(t_count));
  }
  const double dt = trajectory.dt;
  const auto& x = trajectory.positions;

  std::vector<Vector3d> velocity(t_count - 1);
  for (int t = 0; t + 1 < t_count; ++t) {
    velocity[t] = (x[t + 1] - x[t]) / dt;
  }

  LatentSequence latent;
  latent.phi.reserve(t_count);
  latent.theta.reserve(t_count);
  latent.u.reserve(t_count);
  for (int t = 0; t + 2 < t_count; ++t) {
    const Vector3d accel = (velocity[t + 1] - velocity[t]) / dt;
    try {
      latent.push_back(latent_from_accel(accel, params));
    } catch (const FreeFall&) {
      throw FreeFall("free-fall acceleration at timestep " + std::to_string(t),
                     t);
    }
  }
  // Pad the two trailing entries so |latent| == |trajectory|.
  const LatentSample tail = latent.at(latent.size() - 1);
  latent.push_back(tail);
  latent.push_back(tail);

  InitialState initial{x[0], velocity[0]};
  return {std::move(latent), initial};
}

Trajectory latent_to_trajectory(const LatentSequence& latent,
                                const InitialState& initial,
                                const QuadParams& params) {
  Trajectory out;
  out.dt = params.dt;
  const int t_count = latent.size();
  out.positions.resize(t_count);
  Vector3d x = initial.x0;
  Vector3d v = initial.v0;
  for (int t = 0; t < t_count; ++t) {
    out.positions[t] = x;
    if (t + 1 < t_count) {
      const Vector3d a = accel_from_latent(latent.at(t), params);
      x = x + v * params.dt;
      v = v + a * params.dt;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) {
    return {1.0};
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = w;
    sum += w;
  }
  for (double& w : kernel) {
    w /= sum;
  }
  return kernel;
}

std::vector<double> smooth_series(const std::vector<double>& values,
                                  double sigma) {
  if (sigma <= 0.0 || values.size() <= 1) {
    return values;
  }
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = static_cast<int>(values.size());
  std::vector<double> out(values.size());
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      acc += kernel[i + radius] * values[reflect_index(t + i, n)];
    }
    out[t] = acc;
  }
  return out;
}

LatentSequence smooth_latent(const LatentSequence& latent, double sigma) {
  LatentSequence out;
  out.phi = smooth_series(latent.phi, sigma);
  out.theta = smooth_series(latent.theta, sigma);
  out.u = smooth_series(latent.u, sigma);
  return out;
}

std::vector<Vector3d> body_rates(const LatentSequence& latent,
                                 const QuadParams& params) {
  const int t_count = latent.size();
  if (t_count < 2) {
    throw InsufficientSamples("body rates need at least 2 latent samples");
  }
  std::vector<Vector3d> rates(t_count);
  for (int t = 1; t < t_count; ++t) {
    const double sp_raw = std::sin(latent.phi[t]);
    const double sp = (sp_raw >= 0.0 ? 1.0 : -1.0) *
                      std::max(std::abs(sp_raw), kSinPhiClamp);
    const double cp = std::cos(latent.phi[t]);
    const double b_p = (latent.phi[t] - latent.phi[t - 1]) / params.dt;
    const double b_q =
        ((latent.theta[t] - latent.theta[t - 1]) / params.dt) * (cp / (sp * sp));
    const double b_r = -latent.theta[t] / sp;
    rates[t] = Vector3d(b_p, b_q, b_r);
  }
  rates[0] = rates[1];
  return rates;
}

ControlSequence control_inputs_from_rates(const std::vector<Vector3d>& rates,
                                          const QuadParams& params) {
  const int t_count = static_cast<int>(rates.size());
  if (t_count < 3) {
    throw InsufficientSamples("control inputs need at least 3 samples");
  }
  ControlSequence out;
  out.u_phi.resize(t_count);
  out.u_theta.resize(t_count);
  // rates[0] duplicates rates[1], so the first meaningful difference is at
  // t = 2; the first two entries repeat it.
  for (int t = 2; t < t_count; ++t) {
    const Vector3d& b = rates[t];
    const Vector3d& b_prev = rates[t - 1];
    out.u_phi[t] = params.Ix * (b.x() - b_prev.x()) / params.dt -
                   (params.Iy - params.Iz) * b.y() * b.z();
    out.u_theta[t] = params.Iy * (b.y() - b_prev.y()) / params.dt -
                     (params.Iz - params.Ix) * b.x() * b.z();
  }
  out.u_phi[0] = out.u_phi[1] = out.u_phi[2];
  out.u_theta[0] = out.u_theta[1] = out.u_theta[2];
  return out;
}

ControlSequence control_inputs(const LatentSequence& latent,
                               const QuadParams& params) {
  return control_inputs_from_rates(body_rates(latent, params), params);
}

}  // namespace skytrack
