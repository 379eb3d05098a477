// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/association.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "skytrack/random.hpp"

namespace skytrack {

std::vector<int> ObservationTable::cameras_with_candidates(int frame) const {
  std::vector<int> out;
  for (int cam = 0; cam < num_cameras_; ++cam) {
    if (!sets_[index(cam, frame)].empty()) {
      out.push_back(cam);
    }
  }
  return out;
}

MinResidualResult min_candidate_residual(const Camera& camera,
                                         const Vector3d& point,
                                         std::span<const Vector2d> candidates,
                                         const RobustLoss& loss) {
  if (candidates.empty()) {
    return {0.0, kNoCandidate};
  }
  Vector2d pixel;
  try {
    pixel = project(camera, point);
  } catch (const NonPositiveDepth&) {
    return {loss.saturation(), kNoCandidate};
  }
  MinResidualResult best{std::numeric_limits<double>::infinity(), kNoCandidate};
  for (size_t k = 0; k < candidates.size(); ++k) {
    const double value = loss((pixel - candidates[k]).squaredNorm());
    if (value < best.value) {
      best.value = value;
      best.index = static_cast<std::int32_t>(k);
    }
  }
  return best;
}

std::optional<TriangulationHypothesis> ransac_triangulate(
    const std::vector<Camera>& cameras,
    const std::vector<std::vector<Vector2d>>& candidate_sets,
    const RansacConfig& config) {
  if (cameras.size() != candidate_sets.size()) {
    throw LengthMismatch("cameras and candidate sets differ in length");
  }
  std::vector<int> eligible;
  for (size_t j = 0; j < candidate_sets.size(); ++j) {
    if (!candidate_sets[j].empty()) {
      eligible.push_back(static_cast<int>(j));
    }
  }
  if (eligible.size() < 2) {
    throw InsufficientViews("RANSAC triangulation needs candidates in at "
                            "least 2 cameras, got " +
                            std::to_string(eligible.size()));
  }

  Rng rng(config.seed);
  std::optional<TriangulationHypothesis> best;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const int a = eligible[rng.bounded(eligible.size())];
    int b = a;
    while (b == a) {
      b = eligible[rng.bounded(eligible.size())];
    }
    const auto& set_a = candidate_sets[a];
    const auto& set_b = candidate_sets[b];
    const Vector2d& pa = set_a[rng.bounded(set_a.size())];
    const Vector2d& pb = set_b[rng.bounded(set_b.size())];

    Vector3d hypothesis;
    try {
      hypothesis = triangulate_two_view(pa, cameras[a], pb, cameras[b]);
    } catch (const DegenerateGeometry&) {
      continue;
    }

    double score = 0.0;
    std::vector<std::int32_t> chosen(cameras.size(), kNoCandidate);
    for (size_t j = 0; j < cameras.size(); ++j) {
      const MinResidualResult r = min_candidate_residual(
          cameras[j], hypothesis, candidate_sets[j], config.loss);
      score += r.value;
      chosen[j] = r.index;
    }
    if (!best || score < best->score) {
      best = TriangulationHypothesis{hypothesis, score, std::move(chosen)};
    }
  }
  return best;
}

InitializationResult initialize_trajectory(const ObservationTable& table,
                                           const std::vector<Camera>& cameras,
                                           const InitializationConfig& config) {
  const int t_count = table.num_frames();
  const int m_count = table.num_cameras();

  InitializationResult out;
  out.trajectory.dt = config.dt;
  out.trajectory.positions.assign(t_count, Vector3d::Zero());
  out.assignment = Assignment(m_count, t_count);
  out.resolved.assign(t_count, false);

  for (int t = 0; t < t_count; ++t) {
    std::vector<std::vector<Vector2d>> sets(m_count);
    int nonempty = 0;
    for (int cam = 0; cam < m_count; ++cam) {
      sets[cam] = table.candidates(cam, t);
      if (!sets[cam].empty()) {
        ++nonempty;
      }
    }
    if (nonempty < 2) {
      continue;
    }
    RansacConfig per_frame = config.ransac;
    per_frame.seed = config.ransac.seed + static_cast<std::uint64_t>(t);
    const auto hypothesis = ransac_triangulate(cameras, sets, per_frame);
    if (!hypothesis) {
      continue;
    }
    out.trajectory.positions[t] = hypothesis->point;
    out.resolved[t] = true;
    for (int cam = 0; cam < m_count; ++cam) {
      out.assignment.at(cam, t) = hypothesis->chosen[cam];
    }
  }

  // Fill gaps: linear interpolation between nearest resolved neighbors,
  // nearest-value extension at the ends.
  int first = -1;
  int last = -1;
  for (int t = 0; t < t_count; ++t) {
    if (out.resolved[t]) {
      if (first < 0) {
        first = t;
      }
      last = t;
    }
  }
  if (first < 0) {
    throw NoResolvableFrames("no frame could be triangulated");
  }
  for (int t = 0; t < first; ++t) {
    out.trajectory.positions[t] = out.trajectory.positions[first];
  }
  for (int t = last + 1; t < t_count; ++t) {
    out.trajectory.positions[t] = out.trajectory.positions[last];
  }
  int prev = first;
  for (int t = first + 1; t <= last; ++t) {
    if (!out.resolved[t]) {
      continue;
    }
    if (t > prev + 1) {
      const Vector3d& a = out.trajectory.positions[prev];
      const Vector3d& b = out.trajectory.positions[t];
      for (int k = prev + 1; k < t; ++k) {
        const double alpha = static_cast<double>(k - prev) / (t - prev);
        out.trajectory.positions[k] = (1.0 - alpha) * a + alpha * b;
      }
    }
    prev = t;
  }
  return out;
}

ObservationTable restrict_to_assignment(const ObservationTable& table,
                                        const Assignment& assignment) {
  ObservationTable out(table.num_cameras(), table.num_frames());
  for (int cam = 0; cam < table.num_cameras(); ++cam) {
    for (int t = 0; t < table.num_frames(); ++t) {
      const std::int32_t k = assignment.at(cam, t);
      if (k == kNoCandidate) {
        continue;
      }
      const auto& set = table.candidates(cam, t);
      if (k >= 0 && k < static_cast<std::int32_t>(set.size())) {
        out.candidates(cam, t).push_back(set[k]);
      }
    }
  }
  return out;
}

}  // namespace skytrack
