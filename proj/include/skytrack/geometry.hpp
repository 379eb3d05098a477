// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

#include "skytrack/error.hpp"

namespace skytrack {

using Eigen::Matrix3d;
using Eigen::Quaterniond;
using Eigen::Vector2d;
using Eigen::Vector3d;

// Pinhole intrinsics with two-coefficient radial distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  int width = 0;
  int height = 0;
};

// Rigid camera pose, world -> camera: x_cam = R * x_world + t.
struct Camera {
  int id = 0;
  Intrinsics intrinsics;
  Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Vector3d translation = Vector3d::Zero();

  Vector3d center() const { return -(rotation.conjugate() * translation); }

  // Throws ParseError when the rotation deviates from a unit quaternion by
  // more than 1e-9 (orthonormality check of the stored pose).
  void validate() const;
};

// x -> scale * R * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Vector3d translation = Vector3d::Zero();

  Vector3d apply(const Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }
  SimilarityTransform inverse() const;
  SimilarityTransform compose(const SimilarityTransform& inner) const;
};

// Radial distortion on normalized image coordinates.
Vector2d distort_normalized(const Intrinsics& intr, const Vector2d& xn);

// Inverse of distort_normalized via Newton iteration on the radial scale
// (at most 10 iterations, tolerance 1e-12 on the normalized radius).
Vector2d undistort_normalized(const Intrinsics& intr, const Vector2d& xd);

// Projects a world point into the camera. Throws NonPositiveDepth when the
// point is at or behind the camera plane.
Vector2d project(const Camera& camera, const Vector3d& point);

// Positive depth of a world point in the camera frame (may be <= 0).
double point_depth(const Camera& camera, const Vector3d& point);

// Projection with derivatives used by the solver. d_rotation is relative to
// a left-multiplied axis-angle increment of the rotation.
struct ProjectionJacobians {
  Vector2d pixel;
  Eigen::Matrix<double, 2, 3> d_point;
  Eigen::Matrix<double, 2, 3> d_rotation;
  Eigen::Matrix<double, 2, 3> d_translation;
};
ProjectionJacobians project_with_jacobians(const Camera& camera,
                                           const Vector3d& point);

// Midpoint of the common perpendicular of the two back-projected rays.
// Throws DegenerateGeometry when the rays are parallel within 1e-8 rad or
// the camera centers coincide.
Vector3d triangulate_two_view(const Vector2d& p1, const Camera& c1,
                              const Vector2d& p2, const Camera& c2);

struct AlignmentOptions {
  double trim_fraction = 0.10;  // fraction of worst correspondences dropped
  int max_iterations = 20;
};

// Robust similarity alignment estimate -> reference (trimmed least squares,
// closed-form Horn/Umeyama solve per reweighting round). Throws
// DegenerateConfiguration when either point set is collinear.
SimilarityTransform align_similarity(const std::vector<Vector3d>& estimate,
                                     const std::vector<Vector3d>& reference,
                                     const AlignmentOptions& options = {});

}  // namespace skytrack
