// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "skytrack/random.hpp"

namespace skytrack {

namespace {

// PD gains and actuator limits of the waypoint controller. Tuned once for
// stable flight across the default volume; not exposed in the config.
constexpr double kPositionGain = 1.2;   // 1/s^2
constexpr double kVelocityGain = 1.8;   // 1/s
constexpr double kTiltClip = 0.35;      // rad
constexpr double kThrustFloor = 0.3;    // x m g
constexpr double kThrustCeil = 2.0;     // x m g
constexpr double kArrivalRadius = 0.5;  // m

constexpr std::uint64_t kFlightSalt = 101;
constexpr std::uint64_t kCameraSalt = 202;
constexpr std::uint64_t kRenderSalt = 303;
constexpr std::uint64_t kPerturbSalt = 404;

Vector3d sample_in_box(Rng& rng, const Box& box) {
  return Vector3d(rng.uniform(box.min.x(), box.max.x()),
                  rng.uniform(box.min.y(), box.max.y()),
                  rng.uniform(box.min.z(), box.max.z()));
}

}  // namespace

FlightResult generate_flight(const SimConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, kFlightSalt));
  const QuadParams& quad = cfg.quad;
  const double mg = quad.m * quad.g;

  std::vector<Vector3d> waypoints(std::max(1, cfg.waypoints));
  for (Vector3d& w : waypoints) {
    w = sample_in_box(rng, cfg.volume);
  }

  FlightResult out;
  out.initial_state.x0 = waypoints[0];
  out.initial_state.v0 = Vector3d::Zero();

  Vector3d x = out.initial_state.x0;
  Vector3d v = out.initial_state.v0;
  size_t target = waypoints.size() > 1 ? 1 : 0;

  for (int t = 0; t < cfg.frames; ++t) {
    if ((x - waypoints[target]).norm() < kArrivalRadius) {
      target = (target + 1) % waypoints.size();
    }
    const Vector3d desired =
        kPositionGain * (waypoints[target] - x) - kVelocityGain * v;

    LatentSample latent;
    try {
      latent = latent_from_accel(desired, quad);
    } catch (const FreeFall&) {
      latent = {0.0, 0.0, mg};
    }
    latent.phi = std::clamp(latent.phi, -kTiltClip, kTiltClip);
    latent.theta = std::clamp(latent.theta, -kTiltClip, kTiltClip);
    latent.u = std::clamp(latent.u, kThrustFloor * mg, kThrustCeil * mg);
    out.latent.push_back(latent);

    const Vector3d accel = accel_from_latent(latent, quad);
    x = x + v * quad.dt;
    v = v + accel * quad.dt;
  }

  out.trajectory = latent_to_trajectory(out.latent, out.initial_state, quad);
  return out;
}

std::vector<Camera> place_cameras(const SimConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, kCameraSalt));
  const Vector3d center = cfg.volume.center();
  const double radius = 1.5 * cfg.volume.half_diagonal();

  std::vector<Camera> cameras(cfg.n_cameras);
  for (int j = 0; j < cfg.n_cameras; ++j) {
    const double azimuth =
        2.0 * M_PI * (j + rng.uniform(-0.3, 0.3)) / cfg.n_cameras;
    const double elevation = rng.uniform(5.0, 35.0) * M_PI / 180.0;
    const Vector3d position =
        center + radius * Vector3d(std::cos(azimuth) * std::cos(elevation),
                                   std::sin(azimuth) * std::cos(elevation),
                                   std::sin(elevation));

    const Vector3d forward = (center - position).normalized();
    const Vector3d right = forward.cross(Vector3d::UnitZ()).normalized();
    const Vector3d down = forward.cross(right).normalized();
    Matrix3d R;
    R.row(0) = right;
    R.row(1) = down;
    R.row(2) = forward;

    Camera& cam = cameras[j];
    cam.id = j;
    cam.intrinsics.fx = 1600.0;
    cam.intrinsics.fy = 1600.0;
    cam.intrinsics.cx = 2704.0 / 2.0;
    cam.intrinsics.cy = 1536.0 / 2.0;
    cam.intrinsics.width = 2704;
    cam.intrinsics.height = 1536;
    cam.rotation = Quaterniond(R).normalized();
    cam.translation = -(cam.rotation * position);
  }
  return cameras;
}

RenderResult render_detections(const Trajectory& trajectory,
                               const std::vector<Camera>& cameras,
                               const NoiseConfig& noise, std::uint64_t seed,
                               int candidate_cap) {
  const int t_count = trajectory.size();
  const int m_count = static_cast<int>(cameras.size());
  RenderResult out{ObservationTable(m_count, t_count),
                   Assignment(m_count, t_count)};

  for (int cam_idx = 0; cam_idx < m_count; ++cam_idx) {
    Rng rng(mix_seed(seed, kRenderSalt + cam_idx));
    const Camera& cam = cameras[cam_idx];
    const double width = cam.intrinsics.width;
    const double height = cam.intrinsics.height;
    auto in_bounds = [&](const Vector2d& p) {
      return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
    };

    for (int t = 0; t < t_count; ++t) {
      auto& set = out.table.candidates(cam_idx, t);

      bool have_truth = false;
      Vector2d truth = Vector2d::Zero();
      try {
        const Vector2d exact = project(cam, trajectory.positions[t]);
        if (in_bounds(exact) && rng.uniform() >= noise.miss_rate) {
          truth = exact + Vector2d(rng.normal(0.0, noise.sigma_px),
                                   rng.normal(0.0, noise.sigma_px));
          have_truth = in_bounds(truth);
        }
      } catch (const NonPositiveDepth&) {
        // not visible in this camera
      }

      const int n_outliers = static_cast<int>(
          rng.bounded(static_cast<std::uint64_t>(noise.outlier_max) + 1));
      std::vector<Vector2d> outliers;
      outliers.reserve(n_outliers);
      for (int k = 0; k < n_outliers; ++k) {
        Vector2d p;
        if (noise.outlier_model == OutlierModel::kUniformImage || !have_truth) {
          p = Vector2d(rng.uniform(0.0, width), rng.uniform(0.0, height));
        } else {
          p = truth + Vector2d(rng.normal(0.0, noise.clutter_sigma_px),
                               rng.normal(0.0, noise.clutter_sigma_px));
          if (!in_bounds(p)) {
            p = Vector2d(std::clamp(p.x(), 0.0, width),
                         std::clamp(p.y(), 0.0, height));
          }
        }
        outliers.push_back(p);
      }

      int total = (have_truth ? 1 : 0) + static_cast<int>(outliers.size());
      if (total > candidate_cap) {
        outliers.resize(candidate_cap - (have_truth ? 1 : 0));
        total = candidate_cap;
      }

      // Insert the true detection at a random position among the outliers.
      std::int32_t truth_index = kNoCandidate;
      if (have_truth) {
        truth_index =
            static_cast<std::int32_t>(rng.bounded(outliers.size() + 1));
      }
      set.reserve(total);
      for (int k = 0, o = 0; k < total; ++k) {
        if (k == truth_index) {
          set.push_back(truth);
        } else {
          set.push_back(outliers[o++]);
        }
      }
      out.assignment.at(cam_idx, t) = truth_index;
    }
  }
  return out;
}

std::vector<Camera> perturb_cameras(const std::vector<Camera>& cameras,
                                    const PerturbConfig& perturb,
                                    std::uint64_t seed) {
  Rng rng(mix_seed(seed, kPerturbSalt));
  std::vector<Camera> out = cameras;
  for (size_t j = 0; j < out.size(); ++j) {
    if (perturb.keep_first_fixed && j == 0) {
      continue;
    }
    Camera& cam = out[j];
    const Vector3d center =
        cam.center() + Vector3d(rng.normal(0.0, perturb.sigma_position),
                                rng.normal(0.0, perturb.sigma_position),
                                rng.normal(0.0, perturb.sigma_position));

    Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    while (axis.norm() < 1e-12) {
      axis = Vector3d(rng.normal(), rng.normal(), rng.normal());
    }
    axis.normalize();
    const double angle =
        std::abs(rng.normal(0.0, perturb.sigma_orientation_deg * M_PI / 180.0));
    cam.rotation =
        (Quaterniond(Eigen::AngleAxisd(angle, axis)) * cam.rotation).normalized();
    cam.translation = -(cam.rotation * center);
  }
  return out;
}

SimulatedScene simulate_scene(const SimConfig& cfg) {
  SimulatedScene scene;
  const FlightResult flight = generate_flight(cfg);
  scene.truth.x_gt = flight.trajectory;
  scene.truth.latent_gt = flight.latent;
  scene.truth.controls_gt = control_inputs(flight.latent, cfg.quad);
  scene.truth.initial_state = flight.initial_state;
  scene.truth.cameras_gt = place_cameras(cfg);

  RenderResult rendered = render_detections(flight.trajectory,
                                            scene.truth.cameras_gt, cfg.noise,
                                            cfg.seed, cfg.candidate_cap);
  scene.observations = std::move(rendered.table);
  scene.truth.assignment_gt = std::move(rendered.assignment);
  scene.cameras_initial =
      perturb_cameras(scene.truth.cameras_gt, cfg.perturb, cfg.seed);
  return scene;
}

}  // namespace skytrack
