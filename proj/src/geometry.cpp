// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace skytrack {

namespace {

constexpr double kParallelRayTol = 1e-8;    // rad
constexpr double kCoincidentCenterTol = 1e-9;  // m

double distortion_factor(const Intrinsics& intr, double r2) {
  return 1.0 + r2 * (intr.k1 + r2 * intr.k2);
}

}  // namespace

void Camera::validate() const {
  const double norm = rotation.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw ParseError("camera " + std::to_string(id) +
                     ": rotation is not orthonormal (|q| deviates by " +
                     std::to_string(std::abs(norm - 1.0)) + ")");
  }
  if (intrinsics.fx <= 0.0 || intrinsics.fy <= 0.0) {
    throw ParseError("camera " + std::to_string(id) +
                     ": focal lengths must be positive");
  }
  if (intrinsics.width <= 0 || intrinsics.height <= 0) {
    throw ParseError("camera " + std::to_string(id) +
                     ": image size must be positive");
  }
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.conjugate();
  inv.translation = -(inv.scale * (inv.rotation * translation));
  return inv;
}

SimilarityTransform SimilarityTransform::compose(
    const SimilarityTransform& inner) const {
  SimilarityTransform out;
  out.scale = scale * inner.scale;
  out.rotation = (rotation * inner.rotation).normalized();
  out.translation = scale * (rotation * inner.translation) + translation;
  return out;
}

Vector2d distort_normalized(const Intrinsics& intr, const Vector2d& xn) {
  return distortion_factor(intr, xn.squaredNorm()) * xn;
}

Vector2d undistort_normalized(const Intrinsics& intr, const Vector2d& xd) {
  if (intr.k1 == 0.0 && intr.k2 == 0.0) {
    return xd;
  }
  // The distortion is radial: rd = ru * (1 + k1 ru^2 + k2 ru^4). Solve for
  // ru by Newton, then rescale the direction.
  const double rd = xd.norm();
  if (rd == 0.0) {
    return xd;
  }
  double ru = rd;
  for (int iter = 0; iter < 10; ++iter) {
    const double r2 = ru * ru;
    const double f = ru * distortion_factor(intr, r2) - rd;
    const double df = 1.0 + 3.0 * intr.k1 * r2 + 5.0 * intr.k2 * r2 * r2;
    const double step = f / df;
    ru -= step;
    if (std::abs(step) < 1e-12) {
      break;
    }
  }
  return xd * (ru / rd);
}

double point_depth(const Camera& camera, const Vector3d& point) {
  return (camera.rotation * point + camera.translation).z();
}

Vector2d project(const Camera& camera, const Vector3d& point) {
  const Vector3d xc = camera.rotation * point + camera.translation;
  if (xc.z() <= 0.0) {
    throw NonPositiveDepth("point has non-positive depth in camera " +
                           std::to_string(camera.id));
  }
  const Vector2d xn(xc.x() / xc.z(), xc.y() / xc.z());
  const Vector2d xd = distort_normalized(camera.intrinsics, xn);
  return Vector2d(camera.intrinsics.fx * xd.x() + camera.intrinsics.cx,
                  camera.intrinsics.fy * xd.y() + camera.intrinsics.cy);
}

ProjectionJacobians project_with_jacobians(const Camera& camera,
                                           const Vector3d& point) {
  const Matrix3d R = camera.rotation.toRotationMatrix();
  const Vector3d xc = R * point + camera.translation;
  if (xc.z() <= 0.0) {
    throw NonPositiveDepth("point has non-positive depth in camera " +
                           std::to_string(camera.id));
  }
  const double inv_z = 1.0 / xc.z();
  const Vector2d xn(xc.x() * inv_z, xc.y() * inv_z);

  Eigen::Matrix<double, 2, 3> d_norm;
  d_norm << inv_z, 0.0, -xn.x() * inv_z,
            0.0, inv_z, -xn.y() * inv_z;

  const Intrinsics& intr = camera.intrinsics;
  const double r2 = xn.squaredNorm();
  const double d = distortion_factor(intr, r2);
  const double dd_dr2 = intr.k1 + 2.0 * intr.k2 * r2;
  Eigen::Matrix2d d_dist;
  d_dist(0, 0) = d + 2.0 * xn.x() * xn.x() * dd_dr2;
  d_dist(0, 1) = 2.0 * xn.x() * xn.y() * dd_dr2;
  d_dist(1, 0) = d_dist(0, 1);
  d_dist(1, 1) = d + 2.0 * xn.y() * xn.y() * dd_dr2;

  Eigen::Matrix2d focal = Eigen::Matrix2d::Zero();
  focal(0, 0) = intr.fx;
  focal(1, 1) = intr.fy;

  const Eigen::Matrix<double, 2, 3> d_xc = focal * d_dist * d_norm;

  ProjectionJacobians out;
  const Vector2d xd = d * xn;
  out.pixel = Vector2d(intr.fx * xd.x() + intr.cx, intr.fy * xd.y() + intr.cy);
  out.d_point = d_xc * R;
  // Left-multiplied increment: xc(w) = exp([w]x) R p + t, so dxc/dw = -[R p]x.
  Matrix3d neg_skew;
  const Vector3d v = xc - camera.translation;
  neg_skew << 0.0, v.z(), -v.y(),
              -v.z(), 0.0, v.x(),
              v.y(), -v.x(), 0.0;
  out.d_rotation = d_xc * neg_skew;
  out.d_translation = d_xc;
  return out;
}

Vector3d triangulate_two_view(const Vector2d& p1, const Camera& c1,
                              const Vector2d& p2, const Camera& c2) {
  const Vector3d o1 = c1.center();
  const Vector3d o2 = c2.center();
  if ((o1 - o2).norm() < kCoincidentCenterTol) {
    throw DegenerateGeometry("camera centers coincide");
  }

  auto back_project = [](const Vector2d& pixel, const Camera& cam) {
    const Intrinsics& intr = cam.intrinsics;
    const Vector2d xd((pixel.x() - intr.cx) / intr.fx,
                      (pixel.y() - intr.cy) / intr.fy);
    const Vector2d xn = undistort_normalized(intr, xd);
    const Vector3d dir_cam(xn.x(), xn.y(), 1.0);
    return (cam.rotation.conjugate() * dir_cam).normalized();
  };

  const Vector3d d1 = back_project(p1, c1);
  const Vector3d d2 = back_project(p2, c2);
  if (d1.cross(d2).norm() < kParallelRayTol) {
    throw DegenerateGeometry("rays are parallel within tolerance");
  }

  // Closest points on the two rays: o1 + s d1 and o2 + t d2.
  const Vector3d w = o1 - o2;
  const double b = d1.dot(d2);
  const double dmt = d1.dot(w);
  const double e = d2.dot(w);
  const double denom = 1.0 - b * b;
  const double s = (b * e - dmt) / denom;
  const double t = (e - b * dmt) / denom;
  return 0.5 * (o1 + s * d1 + o2 + t * d2);
}

namespace {

struct WeightedFit {
  SimilarityTransform transform;
  bool ok = false;
};

WeightedFit fit_similarity(const std::vector<Vector3d>& estimate,
                           const std::vector<Vector3d>& reference,
                           const std::vector<double>& weights) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  WeightedFit fit;
  if (wsum <= 0.0) {
    return fit;
  }
  Vector3d mu_e = Vector3d::Zero();
  Vector3d mu_r = Vector3d::Zero();
  for (size_t i = 0; i < estimate.size(); ++i) {
    mu_e += weights[i] * estimate[i];
    mu_r += weights[i] * reference[i];
  }
  mu_e /= wsum;
  mu_r /= wsum;

  Matrix3d cov = Matrix3d::Zero();
  double var_e = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    const Vector3d de = estimate[i] - mu_e;
    const Vector3d dr = reference[i] - mu_r;
    cov += weights[i] * dr * de.transpose();
    var_e += weights[i] * de.squaredNorm();
  }
  cov /= wsum;
  var_e /= wsum;
  if (var_e <= 0.0) {
    return fit;
  }

  Eigen::JacobiSVD<Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d S = Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    S(2, 2) = -1.0;
  }
  const Matrix3d R = svd.matrixU() * S * svd.matrixV().transpose();
  const double scale = (svd.singularValues().asDiagonal() * S).trace() / var_e;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    return fit;
  }

  fit.transform.scale = scale;
  fit.transform.rotation = Quaterniond(R).normalized();
  fit.transform.translation = mu_r - scale * (R * mu_e);
  fit.ok = true;
  return fit;
}

void check_not_collinear(const std::vector<Vector3d>& points,
                         const char* name) {
  Vector3d mean = Vector3d::Zero();
  for (const Vector3d& p : points) {
    mean += p;
  }
  mean /= static_cast<double>(points.size());
  Eigen::MatrixXd centered(3, points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    centered.col(static_cast<int>(i)) = points[i] - mean;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  const double scale = std::max(sv(0), 1.0);
  if (sv(1) <= 1e-9 * scale) {
    throw DegenerateConfiguration(std::string(name) +
                                  " points are collinear within tolerance");
  }
}

}  // namespace

SimilarityTransform align_similarity(const std::vector<Vector3d>& estimate,
                                     const std::vector<Vector3d>& reference,
                                     const AlignmentOptions& options) {
  if (estimate.size() != reference.size()) {
    throw LengthMismatch("alignment inputs differ in length");
  }
  const size_t n = estimate.size();
  if (n < 3) {
    throw DegenerateConfiguration("alignment needs at least 3 points");
  }
  check_not_collinear(reference, "reference");
  check_not_collinear(estimate, "estimate");

  const size_t keep = std::max<size_t>(
      3, static_cast<size_t>(
             std::ceil((1.0 - options.trim_fraction) * static_cast<double>(n))));

  std::vector<double> weights(n, 1.0);
  SimilarityTransform best;
  for (int round = 0; round < options.max_iterations; ++round) {
    const WeightedFit fit = fit_similarity(estimate, reference, weights);
    if (!fit.ok) {
      throw DegenerateConfiguration("alignment solve failed");
    }
    best = fit.transform;
    if (keep == n) {
      break;  // no trimming requested
    }
    std::vector<double> residuals(n);
    for (size_t i = 0; i < n; ++i) {
      residuals[i] = (best.apply(estimate[i]) - reference[i]).norm();
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::nth_element(order.begin(), order.begin() + (keep - 1), order.end(),
                     [&](size_t a, size_t b) {
                       return residuals[a] < residuals[b];
                     });
    std::vector<double> next(n, 0.0);
    for (size_t i = 0; i < keep; ++i) {
      next[order[i]] = 1.0;
    }
    if (next == weights) {
      break;  // trimmed set stable
    }
    weights = std::move(next);
  }
  return best;
}

}  // namespace skytrack
