// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>

namespace skytrack {

namespace {

// Per-step prediction errors are measured in acceleration units (residual
// divided by dt^2) so the prior weight keeps one meaning across frame rates.
double position_residual_scale(double dt) { return 1.0 / (dt * dt); }

Quaterniond exp_quaternion(const Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    return q.normalized();
  }
  return Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
}

constexpr double kDampingDiagFloor = 1e-8;
constexpr double kEnergyFloor = 1e-18;

}  // namespace

EnergyBreakdown total_energy(const ProblemState& state,
                             const ObservationTable& observations,
                             const PriorTargets& targets,
                             const SolverConfig& config,
                             const QuadParams& quad) {
  const ResidualEvaluator evaluator(state, observations, targets, config, quad);
  return evaluator.energy(state);
}

// ---------------------------------------------------------------------------
// ResidualEvaluator
// ---------------------------------------------------------------------------

struct ResidualEvaluator::Impl {
  // Frozen inputs for one outer iteration.
  ProblemState state;
  const ObservationTable* observations = nullptr;
  PriorTargets targets;
  SolverConfig config;
  QuadParams quad;

  int num_cameras = 0;
  int num_free_cameras = 0;
  int num_points = 0;
  bool use_latents = false;
  double residual_scale = 1.0;  // position-family residual scale

  // Reprojection residual descriptors (frozen candidate choice).
  struct Reprojection {
    int camera = 0;
    int frame = 0;
    int candidate = 0;
  };
  std::vector<Reprojection> reprojections;

  // Dynamics-consistency predictor constants from the previous iteration:
  // x_hat(t) = base(t) + accel(latent[t-2]) * dt^2, for t >= 2.
  std::vector<Vector3d> predictor_base;

  int camera_offset(int camera) const { return 6 * (camera - 1); }
  int point_offset(int t) const { return 6 * num_free_cameras + 3 * t; }
  int latent_offset(int t) const {
    return 6 * num_free_cameras + 3 * num_points + 3 * t;
  }

  void build(const ObservationTable& obs) {
    observations = &obs;
    num_cameras = static_cast<int>(state.cameras.size());
    num_free_cameras = config.optimize_cameras ? std::max(0, num_cameras - 1) : 0;
    num_points = state.trajectory.size();
    use_latents = config.prior.kind == PriorKind::kDynamics;
    residual_scale = position_residual_scale(state.trajectory.dt);

    for (int cam = 0; cam < num_cameras; ++cam) {
      for (int t = 0; t < num_points; ++t) {
        const auto& set = obs.candidates(cam, t);
        if (set.empty()) {
          continue;
        }
        const MinResidualResult r = min_candidate_residual(
            state.cameras[cam], state.trajectory.positions[t], set,
            config.pixel_loss);
        if (r.index == kNoCandidate) {
          continue;  // behind the camera; scored by the energy, no residual
        }
        reprojections.push_back({cam, t, r.index});
      }
    }

    if (use_latents) {
      if (state.latent.size() != num_points) {
        throw Error("latent sequence length does not match the trajectory");
      }
      const double dt = state.trajectory.dt;
      predictor_base.assign(num_points, Vector3d::Zero());
      for (int t = 2; t < num_points; ++t) {
        const Vector3d& x1 = state.trajectory.positions[t - 1];
        const Vector3d& x2 = state.trajectory.positions[t - 2];
        const Vector3d v = (x1 - x2) / dt;
        predictor_base[t] = x1 + v * dt;
      }
    }
  }

  bool has_position_targets() const {
    return !use_latents && config.prior.kind != PriorKind::kNone &&
           !targets.positions.empty();
  }

  // Residual block visitor. The callback receives the family tag, the raw
  // residual, the robust loss and family weight, and per-block Jacobian
  // writers. Jacobians are only computed when `want_jacobian` is set.
  template <typename Callback>
  void visit(const ProblemState& s, bool want_jacobian, Callback&& cb) const {
    const double dt = s.trajectory.dt;

    for (const Reprojection& item : reprojections) {
      const Camera& camera = s.cameras[item.camera];
      const Vector3d& point = s.trajectory.positions[item.frame];
      const Vector2d& observed =
          observations->candidates(item.camera, item.frame)[item.candidate];
      Eigen::VectorXd r(2);
      Eigen::Matrix<double, 2, 3> d_point, d_rot, d_tr;
      if (want_jacobian) {
        const ProjectionJacobians pj = project_with_jacobians(camera, point);
        r = pj.pixel - observed;
        d_point = pj.d_point;
        d_rot = pj.d_rotation;
        d_tr = pj.d_translation;
      } else {
        r = project(camera, point) - observed;
      }
      cb('r', item, r, d_rot, d_tr, d_point);
    }

    if (use_latents) {
      for (int t = 2; t < num_points; ++t) {
        const LatentSample gamma = s.latent.at(t - 2);
        const Vector3d accel = accel_from_latent_unchecked(gamma, quad);
        const Vector3d predicted = predictor_base[t] + accel * dt * dt;
        const Vector3d r =
            (s.trajectory.positions[t] - predicted) * residual_scale;
        Matrix3d d_latent = Matrix3d::Zero();
        if (want_jacobian) {
          // d r / d gamma = -(d accel / d gamma) dt^2 * scale = -J_a.
          d_latent = -accel_jacobian(gamma, quad) * dt * dt * residual_scale;
        }
        cb_consistency(cb, t, r, d_latent);
      }
      for (int t = 0; t < num_points; ++t) {
        cb_anchor(cb, t, 0, s.latent.phi[t] - targets.latent.phi[t]);
        cb_anchor(cb, t, 1, s.latent.theta[t] - targets.latent.theta[t]);
        cb_anchor(cb, t, 2, s.latent.u[t] - targets.latent.u[t]);
      }
    } else if (has_position_targets()) {
      for (int t = 0; t < num_points; ++t) {
        const Vector3d r =
            (s.trajectory.positions[t] - targets.positions[t]) *
            residual_scale;
        cb_position(cb, t, r);
      }
    }
  }

  // Small helpers so `visit` can hand each family through one callback
  // signature; see the Visitor structs below.
  template <typename Callback>
  static void cb_consistency(Callback&& cb, int t, const Vector3d& r,
                             const Matrix3d& d_latent) {
    cb.consistency(t, r, d_latent);
  }
  template <typename Callback>
  static void cb_anchor(Callback&& cb, int t, int channel, double r) {
    cb.anchor(t, channel, r);
  }
  template <typename Callback>
  static void cb_position(Callback&& cb, int t, const Vector3d& r) {
    cb.position(t, r);
  }

  double anchor_weight(int channel) const {
    switch (channel) {
      case 0: return config.lambda * config.lambda_phi;
      case 1: return config.lambda * config.lambda_theta;
      default: return config.lambda * config.lambda_u;
    }
  }
  const RobustLoss& anchor_loss(int channel) const {
    switch (channel) {
      case 0: return config.phi_loss;
      case 1: return config.theta_loss;
      default: return config.u_loss;
    }
  }
};

namespace {

using Impl = ResidualEvaluator::Impl;

}  // namespace

ResidualEvaluator::ResidualEvaluator(const ProblemState& state,
                                     const ObservationTable& observations,
                                     const PriorTargets& targets,
                                     const SolverConfig& config,
                                     const QuadParams& quad)
    : impl_(std::make_unique<Impl>()) {
  impl_->state = state;
  impl_->targets = targets;
  impl_->config = config;
  impl_->quad = quad;
  impl_->build(observations);
}

ResidualEvaluator::~ResidualEvaluator() = default;

int ResidualEvaluator::parameter_count() const {
  return 6 * impl_->num_free_cameras + 3 * impl_->num_points +
         (impl_->use_latents ? 3 * impl_->num_points : 0);
}

bool ResidualEvaluator::has_latent_blocks() const { return impl_->use_latents; }

int ResidualEvaluator::residual_count() const {
  int n = 2 * static_cast<int>(impl_->reprojections.size());
  if (impl_->use_latents) {
    n += 3 * std::max(0, impl_->num_points - 2);  // consistency
    n += 3 * impl_->num_points;                   // anchors
  } else if (impl_->has_position_targets()) {
    n += 3 * impl_->num_points;
  }
  return n;
}

ProblemState ResidualEvaluator::apply_step(const ProblemState& base,
                                           const Eigen::VectorXd& delta) const {
  ProblemState out = base;
  const Impl& im = *impl_;
  if (im.config.optimize_cameras) {
    for (int cam = 1; cam < im.num_cameras; ++cam) {
      const int off = im.camera_offset(cam);
      const Vector3d omega = delta.segment<3>(off);
      const Vector3d dtr = delta.segment<3>(off + 3);
      out.cameras[cam].rotation =
          (exp_quaternion(omega) * base.cameras[cam].rotation).normalized();
      out.cameras[cam].translation = base.cameras[cam].translation + dtr;
    }
  }
  for (int t = 0; t < im.num_points; ++t) {
    out.trajectory.positions[t] =
        base.trajectory.positions[t] + delta.segment<3>(im.point_offset(t));
  }
  if (im.use_latents) {
    for (int t = 0; t < im.num_points; ++t) {
      const int off = im.latent_offset(t);
      out.latent.phi[t] = base.latent.phi[t] + delta(off);
      out.latent.theta[t] = base.latent.theta[t] + delta(off + 1);
      out.latent.u[t] = base.latent.u[t] + delta(off + 2);
    }
  }
  return out;
}

namespace {

// Visitor collecting the raw residual stack.
struct StackVisitor {
  const Impl* im;
  Eigen::VectorXd out;
  int row = 0;

  void operator()(char, const Impl::Reprojection&, const Eigen::VectorXd& r,
                  const Eigen::Matrix<double, 2, 3>&,
                  const Eigen::Matrix<double, 2, 3>&,
                  const Eigen::Matrix<double, 2, 3>&) {
    out.segment<2>(row) = r;
    row += 2;
  }
  void consistency(int, const Vector3d& r, const Matrix3d&) {
    out.segment<3>(row) = r;
    row += 3;
  }
  void anchor(int, int, double r) { out(row++) = r; }
  void position(int, const Vector3d& r) {
    out.segment<3>(row) = r;
    row += 3;
  }
};

// Visitor writing the dense analytic Jacobian.
struct DenseJacobianVisitor {
  const Impl* im;
  Eigen::MatrixXd jac;
  int row = 0;

  void operator()(char, const Impl::Reprojection& item, const Eigen::VectorXd&,
                  const Eigen::Matrix<double, 2, 3>& d_rot,
                  const Eigen::Matrix<double, 2, 3>& d_tr,
                  const Eigen::Matrix<double, 2, 3>& d_point) {
    if (im->config.optimize_cameras && item.camera != 0) {
      const int off = im->camera_offset(item.camera);
      jac.block<2, 3>(row, off) = d_rot;
      jac.block<2, 3>(row, off + 3) = d_tr;
    }
    jac.block<2, 3>(row, im->point_offset(item.frame)) = d_point;
    row += 2;
  }
  void consistency(int t, const Vector3d&, const Matrix3d& d_latent) {
    jac.block<3, 3>(row, im->point_offset(t)) =
        Matrix3d::Identity() * im->residual_scale;
    jac.block<3, 3>(row, im->latent_offset(t - 2)) = d_latent;
    row += 3;
  }
  void anchor(int t, int channel, double) {
    jac(row, im->latent_offset(t) + channel) = 1.0;
    ++row;
  }
  void position(int t, const Vector3d&) {
    jac.block<3, 3>(row, im->point_offset(t)) =
        Matrix3d::Identity() * im->residual_scale;
    row += 3;
  }
};

// Visitor recording the block structure of each residual.
struct StructureVisitor {
  const Impl* im;
  std::vector<ResidualEvaluator::ResidualInfo> out;

  void operator()(char family, const Impl::Reprojection& item,
                  const Eigen::VectorXd&, const Eigen::Matrix<double, 2, 3>&,
                  const Eigen::Matrix<double, 2, 3>&,
                  const Eigen::Matrix<double, 2, 3>&) {
    ResidualEvaluator::ResidualInfo info;
    info.family = family;
    if (im->config.optimize_cameras && item.camera != 0) {
      info.blocks.emplace_back('C', item.camera);
    }
    info.blocks.emplace_back('X', item.frame);
    out.push_back(std::move(info));
  }
  void consistency(int t, const Vector3d&, const Matrix3d&) {
    out.push_back({'c', {{'X', t}, {'G', t - 2}}});
  }
  void anchor(int t, int, double) { out.push_back({'a', {{'G', t}}}); }
  void position(int t, const Vector3d&) { out.push_back({'p', {{'X', t}}}); }
};

}  // namespace

Eigen::VectorXd ResidualEvaluator::residuals() const {
  StackVisitor v{impl_.get(), Eigen::VectorXd::Zero(residual_count()), 0};
  impl_->visit(impl_->state, false, v);
  return std::move(v.out);
}

Eigen::VectorXd ResidualEvaluator::residuals(const Eigen::VectorXd& delta) const {
  const ProblemState trial = apply_step(impl_->state, delta);
  StackVisitor v{impl_.get(), Eigen::VectorXd::Zero(residual_count()), 0};
  impl_->visit(trial, false, v);
  return std::move(v.out);
}

Eigen::MatrixXd ResidualEvaluator::dense_jacobian() const {
  DenseJacobianVisitor v{
      impl_.get(), Eigen::MatrixXd::Zero(residual_count(), parameter_count()),
      0};
  impl_->visit(impl_->state, true, v);
  return std::move(v.jac);
}

std::vector<ResidualEvaluator::ResidualInfo> ResidualEvaluator::structure()
    const {
  StructureVisitor v{impl_.get(), {}};
  impl_->visit(impl_->state, false, v);
  return std::move(v.out);
}

EnergyBreakdown ResidualEvaluator::energy(const ProblemState& trial) const {
  const Impl& im = *impl_;
  EnergyBreakdown e;
  e.lambda = im.config.lambda;
  e.lambda_phi = im.config.lambda_phi;
  e.lambda_theta = im.config.lambda_theta;
  e.lambda_u = im.config.lambda_u;

  // Data term: min over candidates, saturation behind the camera.
  for (int cam = 0; cam < im.num_cameras; ++cam) {
    for (int t = 0; t < im.num_points; ++t) {
      const auto& set = im.observations->candidates(cam, t);
      if (set.empty()) {
        continue;
      }
      e.data += min_candidate_residual(trial.cameras[cam],
                                       trial.trajectory.positions[t], set,
                                       im.config.pixel_loss)
                    .value;
    }
  }

  const double dt = trial.trajectory.dt;
  if (im.use_latents) {
    for (int t = 2; t < im.num_points; ++t) {
      const Vector3d accel =
          accel_from_latent_unchecked(trial.latent.at(t - 2), im.quad);
      const Vector3d predicted = im.predictor_base[t] + accel * dt * dt;
      e.consistency += ((trial.trajectory.positions[t] - predicted) *
                        im.residual_scale)
                           .squaredNorm();
    }
    for (int t = 0; t < im.num_points; ++t) {
      const double rp = trial.latent.phi[t] - im.targets.latent.phi[t];
      const double rt = trial.latent.theta[t] - im.targets.latent.theta[t];
      const double ru = trial.latent.u[t] - im.targets.latent.u[t];
      e.anchor_phi += im.config.phi_loss(rp * rp);
      e.anchor_theta += im.config.theta_loss(rt * rt);
      e.anchor_u += im.config.u_loss(ru * ru);
    }
  } else if (im.has_position_targets()) {
    for (int t = 0; t < im.num_points; ++t) {
      e.consistency += ((trial.trajectory.positions[t] - im.targets.positions[t]) *
                        im.residual_scale)
                           .squaredNorm();
    }
  }
  return e;
}

namespace {

// Block-sparse damped normal equations with the latent -> point -> camera
// elimination order. Latents couple only their one consistency point, so
// eliminating them adds no point-point fill; eliminating points then yields
// the usual reduced camera system.
struct NormalEquations {
  int num_free_cameras = 0;
  int num_points = 0;
  bool use_latents = false;

  Eigen::MatrixXd Hcc;
  Eigen::VectorXd bc;
  std::vector<Matrix3d> Hxx;
  std::vector<Vector3d> bx;
  std::vector<Matrix3d> Hgg;
  std::vector<Vector3d> bg;
  // per point: couplings to free cameras (camera index >= 1)
  std::vector<std::vector<std::pair<int, Eigen::Matrix<double, 6, 3>>>> Hcx;
  // consistency coupling H(x_t, gamma_{t-2}), indexed by t
  std::vector<Matrix3d> Hxg;

  Eigen::Matrix<double, 6, 3>* coupling(int camera, int t) {
    for (auto& entry : Hcx[t]) {
      if (entry.first == camera) {
        return &entry.second;
      }
    }
    Hcx[t].emplace_back(camera, Eigen::Matrix<double, 6, 3>::Zero());
    return &Hcx[t].back().second;
  }

  static Matrix3d damped(const Matrix3d& a, double mu) {
    Matrix3d out = a;
    for (int i = 0; i < 3; ++i) {
      out(i, i) += mu * std::max(a(i, i), kDampingDiagFloor);
    }
    return out;
  }

  static Matrix3d inverted(const Matrix3d& a) {
    Matrix3d inv;
    double det = 0.0;
    bool ok = false;
    a.computeInverseAndDetWithCheck(inv, det, ok, 0.0);
    if (!ok || !inv.allFinite()) {
      throw LinearSolveFailure("singular 3x3 block in the damped system");
    }
    return inv;
  }

  Eigen::VectorXd solve(double mu) const {
    std::vector<Matrix3d> Ax(num_points);
    std::vector<Vector3d> rx = bx;
    for (int t = 0; t < num_points; ++t) {
      Ax[t] = damped(Hxx[t], mu);
    }

    // Eliminate latent blocks into their consistency points.
    std::vector<Matrix3d> Ag_inv;
    if (use_latents) {
      Ag_inv.resize(num_points);
      for (int j = 0; j < num_points; ++j) {
        Ag_inv[j] = inverted(damped(Hgg[j], mu));
      }
      for (int t = 2; t < num_points; ++t) {
        const int j = t - 2;
        const Matrix3d W = Hxg[t];
        Ax[t] -= W * Ag_inv[j] * W.transpose();
        rx[t] -= W * Ag_inv[j] * bg[j];
      }
    }

    std::vector<Matrix3d> Ax_inv(num_points);
    for (int t = 0; t < num_points; ++t) {
      Ax_inv[t] = inverted(Ax[t]);
    }

    // Reduced camera system.
    const int cam_dim = 6 * num_free_cameras;
    Eigen::VectorXd delta =
        Eigen::VectorXd::Zero(cam_dim + 3 * num_points +
                              (use_latents ? 3 * num_points : 0));
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(cam_dim);
    if (cam_dim > 0) {
      Eigen::MatrixXd S = Hcc;
      for (int i = 0; i < cam_dim; ++i) {
        S(i, i) += mu * std::max(Hcc(i, i), kDampingDiagFloor);
      }
      Eigen::VectorXd rc = bc;
      for (int t = 0; t < num_points; ++t) {
        for (const auto& [c1, B1] : Hcx[t]) {
          const Eigen::Matrix<double, 6, 3> B1A = B1 * Ax_inv[t];
          rc.segment<6>(6 * (c1 - 1)) -= B1A * rx[t];
          for (const auto& [c2, B2] : Hcx[t]) {
            S.block<6, 6>(6 * (c1 - 1), 6 * (c2 - 1)) -= B1A * B2.transpose();
          }
        }
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
      if (ldlt.info() != Eigen::Success) {
        throw LinearSolveFailure("reduced camera system factorization failed");
      }
      dc = ldlt.solve(rc);
      if (!dc.allFinite()) {
        throw LinearSolveFailure("reduced camera system produced non-finite "
                                 "update");
      }
      delta.head(cam_dim) = dc;
    }

    // Back-substitute points, then latents.
    for (int t = 0; t < num_points; ++t) {
      Vector3d rhs = rx[t];
      for (const auto& [c, B] : Hcx[t]) {
        rhs -= B.transpose() * dc.segment<6>(6 * (c - 1));
      }
      delta.segment<3>(cam_dim + 3 * t) = Ax_inv[t] * rhs;
    }
    if (use_latents) {
      for (int j = 0; j < num_points; ++j) {
        Vector3d rhs = bg[j];
        if (j + 2 < num_points) {
          rhs -= Hxg[j + 2].transpose() *
                 delta.segment<3>(cam_dim + 3 * (j + 2));
        }
        delta.segment<3>(cam_dim + 3 * num_points + 3 * j) = Ag_inv[j] * rhs;
      }
    }
    if (!delta.allFinite()) {
      throw LinearSolveFailure("non-finite parameter update");
    }
    return delta;
  }
};

// Visitor accumulating robust-weighted normal equations.
struct AssembleVisitor {
  const Impl* im;
  NormalEquations* ne;

  void operator()(char, const Impl::Reprojection& item,
                  const Eigen::VectorXd& r,
                  const Eigen::Matrix<double, 2, 3>& d_rot,
                  const Eigen::Matrix<double, 2, 3>& d_tr,
                  const Eigen::Matrix<double, 2, 3>& d_point) {
    const double w = im->config.pixel_loss.weight(r.squaredNorm());
    const int t = item.frame;
    ne->Hxx[t] += w * d_point.transpose() * d_point;
    ne->bx[t] -= w * d_point.transpose() * r;
    if (im->config.optimize_cameras && item.camera != 0) {
      Eigen::Matrix<double, 2, 6> d_cam;
      d_cam << d_rot, d_tr;
      const int off = 6 * (item.camera - 1);
      ne->Hcc.block<6, 6>(off, off) += w * d_cam.transpose() * d_cam;
      ne->bc.segment<6>(off) -= w * d_cam.transpose() * r;
      *ne->coupling(item.camera, t) += w * d_cam.transpose() * d_point;
    }
  }

  void consistency(int t, const Vector3d& r, const Matrix3d& d_latent) {
    const double w = im->config.lambda;  // squared loss
    const Matrix3d d_point = Matrix3d::Identity() * im->residual_scale;
    ne->Hxx[t] += w * d_point.transpose() * d_point;
    ne->bx[t] -= w * d_point.transpose() * r;
    ne->Hgg[t - 2] += w * d_latent.transpose() * d_latent;
    ne->bg[t - 2] -= w * d_latent.transpose() * r;
    ne->Hxg[t] += w * d_point.transpose() * d_latent;
  }

  void anchor(int t, int channel, double r) {
    const double w =
        im->anchor_weight(channel) * im->anchor_loss(channel).weight(r * r);
    ne->Hgg[t](channel, channel) += w;
    ne->bg[t](channel) -= w * r;
  }

  void position(int t, const Vector3d& r) {
    const double w = im->config.lambda;  // squared loss
    const double s = im->residual_scale;
    ne->Hxx[t] += w * s * s * Matrix3d::Identity();
    ne->bx[t] -= w * s * r;
  }
};

}  // namespace

Eigen::VectorXd ResidualEvaluator::solve_step(double damping) const {
  const Impl& im = *impl_;
  NormalEquations ne;
  ne.num_free_cameras = im.num_free_cameras;
  ne.num_points = im.num_points;
  ne.use_latents = im.use_latents;
  ne.Hcc = Eigen::MatrixXd::Zero(6 * im.num_free_cameras, 6 * im.num_free_cameras);
  ne.bc = Eigen::VectorXd::Zero(6 * im.num_free_cameras);
  ne.Hxx.assign(im.num_points, Matrix3d::Zero());
  ne.bx.assign(im.num_points, Vector3d::Zero());
  ne.Hgg.assign(im.use_latents ? im.num_points : 0, Matrix3d::Zero());
  ne.bg.assign(im.use_latents ? im.num_points : 0, Vector3d::Zero());
  ne.Hxg.assign(im.use_latents ? im.num_points : 0, Matrix3d::Zero());
  ne.Hcx.assign(im.num_points, {});

  AssembleVisitor v{&im, &ne};
  im.visit(im.state, true, v);
  return ne.solve(damping);
}

StepResult lm_step(ProblemState& state, const ResidualEvaluator& evaluator,
                   const LmSettings& settings, double& damping) {
  StepResult result;
  result.before = evaluator.energy(state);
  result.after = result.before;

  for (int attempt = 1; attempt <= settings.max_retries; ++attempt) {
    result.attempts = attempt;
    Eigen::VectorXd delta;
    try {
      delta = evaluator.solve_step(damping);
    } catch (const LinearSolveFailure&) {
      damping *= settings.damping_increase;
      continue;
    }
    const ProblemState trial = evaluator.apply_step(state, delta);
    const EnergyBreakdown trial_energy = evaluator.energy(trial);
    if (trial_energy.total() < result.before.total()) {
      state = trial;
      result.accepted = true;
      result.after = trial_energy;
      damping = std::max(damping * settings.damping_decrease, 1e-12);
      break;
    }
    damping *= settings.damping_increase;
  }
  result.damping = damping;
  return result;
}

OptimizeResult optimize(const ObservationTable& observations,
                        const std::vector<Camera>& cameras0,
                        const Trajectory& x0, const SolverConfig& config,
                        const QuadParams& quad) {
  ProblemState state;
  state.cameras = cameras0;
  state.trajectory = x0;

  OptimizeResult result;
  double damping = config.lm.initial_damping;

  for (int s = 1; s <= config.outer_iterations; ++s) {
    PriorTargets targets = make_prior_targets(state.trajectory, quad, config.prior);
    targets.lambda = config.lambda;
    if (config.prior.kind == PriorKind::kDynamics) {
      state.latent = trajectory_to_latent(state.trajectory, quad).first;
    }

    const ResidualEvaluator evaluator(state, observations, targets, config, quad);

    TraceRow row;
    row.iteration = s;
    row.before = evaluator.energy(state);
    if (row.before.total() <= kEnergyFloor) {
      row.after = row.before;
      row.damping = damping;
      result.trace.push_back(row);
      break;
    }

    const StepResult step = lm_step(state, evaluator, config.lm, damping);
    row.accepted = step.accepted;
    row.attempts = step.attempts;
    row.damping = step.damping;
    row.after = step.after;
    result.trace.push_back(row);

    if (step.accepted &&
        step.before.total() - step.after.total() <=
            config.lm.relative_tolerance * std::max(step.before.total(), 1e-30)) {
      break;
    }
  }

  result.cameras = state.cameras;
  result.trajectory = state.trajectory;
  result.latent = trajectory_to_latent(state.trajectory, quad).first;
  result.controls = control_inputs(result.latent, quad);
  result.assignment =
      Assignment(observations.num_cameras(), observations.num_frames());
  for (int cam = 0; cam < observations.num_cameras(); ++cam) {
    for (int t = 0; t < observations.num_frames(); ++t) {
      const auto& set = observations.candidates(cam, t);
      if (set.empty()) {
        continue;
      }
      result.assignment.at(cam, t) =
          min_candidate_residual(result.cameras[cam],
                                 result.trajectory.positions[t], set,
                                 config.pixel_loss)
              .index;
    }
  }
  return result;
}

}  // namespace skytrack
