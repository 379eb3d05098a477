// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/priors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace skytrack {

std::string prior_kind_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::kNone: return "none";
    case PriorKind::kGaussianSmooth: return "gs";
    case PriorKind::kSplineSmooth: return "ss";
    case PriorKind::kKalmanCA: return "kf";
    case PriorKind::kDynamics: return "dm";
  }
  return "none";
}

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "none") return PriorKind::kNone;
  if (name == "gs") return PriorKind::kGaussianSmooth;
  if (name == "ss") return PriorKind::kSplineSmooth;
  if (name == "kf") return PriorKind::kKalmanCA;
  if (name == "dm") return PriorKind::kDynamics;
  throw ParseError("unknown prior kind '" + name + "'");
}

PriorTargets gaussian_targets(const Trajectory& previous, double sigma) {
  const int t_count = previous.size();
  std::vector<double> channel(t_count);
  PriorTargets out;
  out.positions.assign(t_count, Vector3d::Zero());
  for (int axis = 0; axis < 3; ++axis) {
    for (int t = 0; t < t_count; ++t) {
      channel[t] = previous.positions[t][axis];
    }
    const std::vector<double> smooth = smooth_series(channel, sigma);
    for (int t = 0; t < t_count; ++t) {
      out.positions[t][axis] = smooth[t];
    }
  }
  return out;
}

PriorTargets spline_targets(const Trajectory& previous, int knot_spacing) {
  const int t_count = previous.size();
  if (t_count < 4) {
    throw InsufficientSamples("spline fit needs at least 4 samples");
  }
  knot_spacing = std::max(knot_spacing, 1);
  const int segments =
      std::max(1, static_cast<int>(std::ceil(static_cast<double>(t_count - 1) /
                                             knot_spacing)));
  const int num_ctrl = segments + 3;

  // Design matrix of the uniform cubic B-spline basis at the sample times.
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(t_count, num_ctrl);
  const double scale = static_cast<double>(segments) / (t_count - 1);
  for (int t = 0; t < t_count; ++t) {
    const double s = t * scale;
    int seg = std::min(static_cast<int>(s), segments - 1);
    const double u = s - seg;
    const double u2 = u * u;
    const double u3 = u2 * u;
    design(t, seg + 0) = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
    design(t, seg + 1) = (4.0 - 6.0 * u2 + 3.0 * u3) / 6.0;
    design(t, seg + 2) = (1.0 + 3.0 * u + 3.0 * u2 - 3.0 * u3) / 6.0;
    design(t, seg + 3) = u3 / 6.0;
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  PriorTargets out;
  out.positions.assign(t_count, Vector3d::Zero());
  Eigen::VectorXd channel(t_count);
  for (int axis = 0; axis < 3; ++axis) {
    for (int t = 0; t < t_count; ++t) {
      channel(t) = previous.positions[t][axis];
    }
    const Eigen::VectorXd fitted = design * qr.solve(channel);
    for (int t = 0; t < t_count; ++t) {
      out.positions[t][axis] = fitted(t);
    }
  }
  return out;
}

PriorTargets kalman_targets(const Trajectory& previous, double q, double r) {
  const int t_count = previous.size();
  if (t_count < 2) {
    throw InsufficientSamples("Kalman prior needs at least 2 samples");
  }
  const double dt = previous.dt;

  Eigen::Matrix3d F;
  F << 1.0, dt, 0.5 * dt * dt,
       0.0, 1.0, dt,
       0.0, 0.0, 1.0;
  // Continuous white-jerk process noise integrated over one step.
  Eigen::Matrix3d Q;
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  const double dt4 = dt3 * dt;
  const double dt5 = dt4 * dt;
  Q << dt5 / 20.0, dt4 / 8.0, dt3 / 6.0,
       dt4 / 8.0, dt3 / 3.0, dt2 / 2.0,
       dt3 / 6.0, dt2 / 2.0, dt;
  Q *= q;
  const Eigen::RowVector3d H(1.0, 0.0, 0.0);

  PriorTargets out;
  out.positions.assign(t_count, Vector3d::Zero());
  out.positions[0] = previous.positions[0];

  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Vector3d state(previous.positions[0][axis], 0.0, 0.0);
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
    P(0, 0) = std::max(r, 1e-12);
    P(1, 1) = 100.0;
    P(2, 2) = 100.0;
    for (int t = 1; t < t_count; ++t) {
      state = F * state;
      P = F * P * F.transpose() + Q;
      out.positions[t][axis] = state(0);  // prediction before the update
      const double innovation = previous.positions[t][axis] - H * state;
      const double s = (H * P * H.transpose())(0) + r;
      const Eigen::Vector3d gain = P * H.transpose() / s;
      state += gain * innovation;
      P = (Eigen::Matrix3d::Identity() - gain * H) * P;
    }
  }
  return out;
}

PriorTargets dynamics_targets(const Trajectory& previous,
                              const QuadParams& params, double sigma_latent) {
  auto [latent, initial] = trajectory_to_latent(previous, params);
  PriorTargets out;
  out.latent = smooth_latent(latent, sigma_latent);
  out.latent_initial = initial;
  out.positions = latent_to_trajectory(out.latent, initial, params).positions;
  return out;
}

PriorTargets make_prior_targets(const Trajectory& previous,
                                const QuadParams& params,
                                const PriorConfig& config) {
  switch (config.kind) {
    case PriorKind::kNone:
      return {};
    case PriorKind::kGaussianSmooth:
      return gaussian_targets(previous, config.sigma);
    case PriorKind::kSplineSmooth:
      return spline_targets(previous, config.knot_spacing);
    case PriorKind::kKalmanCA:
      return kalman_targets(previous, config.kalman_q, config.kalman_r);
    case PriorKind::kDynamics:
      return dynamics_targets(previous, params, config.sigma_latent);
  }
  return {};
}

}  // namespace skytrack
