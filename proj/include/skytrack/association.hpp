// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "skytrack/dynamics.hpp"
#include "skytrack/geometry.hpp"
#include "skytrack/robust_loss.hpp"

namespace skytrack {

// Upper bound on candidates kept per (camera, frame).
inline constexpr int kCandidateCap = 16;

// Candidate detections of one camera at one frame.
struct CandidateSet {
  int camera_id = 0;
  int frame = 0;
  std::vector<Vector2d> candidates;
};

// Dense per-(camera, frame) candidate storage.
class ObservationTable {
 public:
  ObservationTable() = default;
  ObservationTable(int num_cameras, int num_frames)
      : num_cameras_(num_cameras),
        num_frames_(num_frames),
        sets_(static_cast<size_t>(num_cameras) * num_frames) {}

  int num_cameras() const { return num_cameras_; }
  int num_frames() const { return num_frames_; }

  const std::vector<Vector2d>& candidates(int camera, int frame) const {
    return sets_[index(camera, frame)];
  }
  std::vector<Vector2d>& candidates(int camera, int frame) {
    return sets_[index(camera, frame)];
  }

  // Cameras with at least one candidate at the frame.
  std::vector<int> cameras_with_candidates(int frame) const;

 private:
  size_t index(int camera, int frame) const {
    return static_cast<size_t>(camera) * num_frames_ + frame;
  }

  int num_cameras_ = 0;
  int num_frames_ = 0;
  std::vector<std::vector<Vector2d>> sets_;
};

inline constexpr std::int32_t kNoCandidate = -1;

// Chosen candidate index per (camera, frame); kNoCandidate when absent.
class Assignment {
 public:
  Assignment() = default;
  Assignment(int num_cameras, int num_frames)
      : num_cameras_(num_cameras),
        num_frames_(num_frames),
        index_(static_cast<size_t>(num_cameras) * num_frames, kNoCandidate) {}

  int num_cameras() const { return num_cameras_; }
  int num_frames() const { return num_frames_; }

  std::int32_t at(int camera, int frame) const {
    return index_[static_cast<size_t>(camera) * num_frames_ + frame];
  }
  std::int32_t& at(int camera, int frame) {
    return index_[static_cast<size_t>(camera) * num_frames_ + frame];
  }

  bool operator==(const Assignment&) const = default;

 private:
  int num_cameras_ = 0;
  int num_frames_ = 0;
  std::vector<std::int32_t> index_;
};

struct MinResidualResult {
  double value = 0.0;
  std::int32_t index = kNoCandidate;
};

// Smallest robust reprojection cost over the candidate set and its argmin.
// Empty set -> (0, none); point behind the camera -> (saturation, none).
MinResidualResult min_candidate_residual(const Camera& camera,
                                         const Vector3d& point,
                                         std::span<const Vector2d> candidates,
                                         const RobustLoss& loss);

struct RansacConfig {
  int iterations = 200;
  RobustLoss loss = RobustLoss::huber(2.0);
  std::uint64_t seed = 0;
};

struct TriangulationHypothesis {
  Vector3d point = Vector3d::Zero();
  double score = 0.0;
  // Winning argmin candidate index per camera (kNoCandidate where absent).
  std::vector<std::int32_t> chosen;
};

// RANSAC multi-view triangulation of a single frame: random camera pairs,
// random candidate pairs, two-view hypotheses scored by the summed
// min-candidate cost over all cameras. Deterministic given the seed.
// Throws InsufficientViews with fewer than 2 nonempty sets; returns nullopt
// when every sampled hypothesis was geometrically degenerate.
std::optional<TriangulationHypothesis> ransac_triangulate(
    const std::vector<Camera>& cameras,
    const std::vector<std::vector<Vector2d>>& candidate_sets,
    const RansacConfig& config);

struct InitializationConfig {
  RansacConfig ransac;
  double dt = 1.0 / 30;
};

struct InitializationResult {
  Trajectory trajectory;
  Assignment assignment;
  std::vector<bool> resolved;  // per frame: true when triangulated directly
};

// Per-frame RANSAC triangulation over the whole table; frames that cannot be
// triangulated are filled by linear interpolation between the nearest
// resolved neighbors (nearest-value extension at the ends). Per-frame seeds
// are ransac.seed + frame. Throws NoResolvableFrames when nothing resolves.
InitializationResult initialize_trajectory(const ObservationTable& table,
                                           const std::vector<Camera>& cameras,
                                           const InitializationConfig& config);

// Table restricted to the assigned candidate per (camera, frame); entries
// without an assignment become empty.
ObservationTable restrict_to_assignment(const ObservationTable& table,
                                        const Assignment& assignment);

}  // namespace skytrack
