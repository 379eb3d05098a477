// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skytrack/association.hpp"
#include "skytrack/dynamics.hpp"
#include "skytrack/geometry.hpp"

namespace skytrack {

struct Box {
  Vector3d min = Vector3d(-4.0, -4.0, 1.0);
  Vector3d max = Vector3d(4.0, 4.0, 5.0);

  Vector3d center() const { return 0.5 * (min + max); }
  double half_diagonal() const { return 0.5 * (max - min).norm(); }
};

enum class OutlierModel { kUniformImage, kNearTarget };

struct NoiseConfig {
  double sigma_px = 0.0;       // Gaussian pixel noise on the true detection
  double miss_rate = 0.0;      // probability the true detection is dropped
  int outlier_max = 8;         // outliers per frame ~ Uniform{0..outlier_max}
  OutlierModel outlier_model = OutlierModel::kUniformImage;
  double clutter_sigma_px = 40.0;  // near-target clutter spread
};

struct PerturbConfig {
  double sigma_position = 0.0;         // m, on camera centers
  double sigma_orientation_deg = 0.0;  // deg, rotation angle ~ |N(0, sigma)|
  bool keep_first_fixed = false;       // optionally exempt camera 0 (gauge)
};

struct SimConfig {
  int frames = 510;
  double fps = 30.0;
  int n_cameras = 10;
  Box volume;
  int waypoints = 8;
  NoiseConfig noise;
  PerturbConfig perturb;
  std::uint64_t seed = 1;
  QuadParams quad;
  int candidate_cap = kCandidateCap;
};

struct FlightResult {
  Trajectory trajectory;
  LatentSequence latent;
  InitialState initial_state;
};

// Waypoint flight from a position PD controller whose clipped (roll, pitch,
// throttle) outputs are integrated with the Euler recursion, so the result
// is dynamics-consistent by construction. Deterministic given cfg.seed.
FlightResult generate_flight(const SimConfig& cfg);

// Cameras on a ring band around the volume at 1.5x its half-diagonal,
// looking at the volume center. Fixed intrinsics: fx = fy = 1600 px on a
// 2704 x 1536 frame.
std::vector<Camera> place_cameras(const SimConfig& cfg);

struct RenderResult {
  ObservationTable table;
  Assignment assignment;  // index of the true candidate, or none
};

// True projections plus pixel noise, Bernoulli misses, and shuffled-in
// outliers; candidates outside the image are dropped.
RenderResult render_detections(const Trajectory& trajectory,
                               const std::vector<Camera>& cameras,
                               const NoiseConfig& noise, std::uint64_t seed,
                               int candidate_cap = kCandidateCap);

// Gaussian noise on the camera centers; rotation about a uniform random
// axis by an angle drawn from |N(0, sigma_orientation)|.
std::vector<Camera> perturb_cameras(const std::vector<Camera>& cameras,
                                    const PerturbConfig& perturb,
                                    std::uint64_t seed);

struct GroundTruth {
  Trajectory x_gt;
  LatentSequence latent_gt;
  ControlSequence controls_gt;
  std::vector<Camera> cameras_gt;
  Assignment assignment_gt;
  InitialState initial_state;
};

struct SimulatedScene {
  GroundTruth truth;
  ObservationTable observations;
  std::vector<Camera> cameras_initial;  // perturbed initial guess
};

// Full scene: flight, cameras, rendered detections, perturbed camera guess.
SimulatedScene simulate_scene(const SimConfig& cfg);

}  // namespace skytrack
