// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "skytrack/association.hpp"
#include "skytrack/dynamics.hpp"
#include "skytrack/geometry.hpp"
#include "skytrack/priors.hpp"
#include "skytrack/robust_loss.hpp"

namespace skytrack {

struct LmSettings {
  double initial_damping = 1e-4;
  double damping_increase = 10.0;
  double damping_decrease = 1.0 / 3.0;
  int max_retries = 10;         // solve/step attempts per outer iteration
  double relative_tolerance = 1e-9;
};

struct SolverConfig {
  double lambda = 0.02;        // overall prior weight
  double lambda_phi = 1.0;     // roll anchor weight
  double lambda_theta = 1.0;   // pitch anchor weight
  double lambda_u = 0.1;       // throttle anchor weight
  int outer_iterations = 25;
  bool optimize_cameras = true;  // camera 0 is always held fixed (gauge)
  LmSettings lm;
  RobustLoss pixel_loss = RobustLoss::huber(2.0);   // px
  RobustLoss phi_loss = RobustLoss::huber(0.05);    // rad
  RobustLoss theta_loss = RobustLoss::huber(0.05);  // rad
  RobustLoss u_loss = RobustLoss::huber(0.5);       // N
  PriorConfig prior;
};

// Energy split by residual family. The prior families enter the total with
// the weights recorded alongside them.
struct EnergyBreakdown {
  double data = 0.0;
  double consistency = 0.0;
  double anchor_phi = 0.0;
  double anchor_theta = 0.0;
  double anchor_u = 0.0;
  double lambda = 0.0;
  double lambda_phi = 0.0;
  double lambda_theta = 0.0;
  double lambda_u = 0.0;

  double total() const {
    return data + lambda * (consistency + lambda_phi * anchor_phi +
                            lambda_theta * anchor_theta + lambda_u * anchor_u);
  }
};

// Everything the optimizer moves. `latent` is populated only for the
// dynamics prior; `assignment` is derived from the state, never optimized.
struct ProblemState {
  std::vector<Camera> cameras;
  Trajectory trajectory;
  LatentSequence latent;
  Assignment assignment;
};

// Energy of a state under the given targets; the dynamics-consistency
// predictor constants are taken from the state's own trajectory.
EnergyBreakdown total_energy(const ProblemState& state,
                             const ObservationTable& observations,
                             const PriorTargets& targets,
                             const SolverConfig& config,
                             const QuadParams& quad);

// Residual and Jacobian evaluator for one outer iteration. Freezes the
// candidate argmin choices and the previous-iteration trajectory constants
// of the dynamics-consistency predictor, so every residual couples at most
// one camera block, one point block, and one latent block, and no residual
// couples two point or two latent blocks.
//
// Parameter layout: per free camera (all but camera 0) a 6-vector
// [rotation increment, translation increment], then 3 per trajectory point,
// then 3 per latent sample (dynamics prior only).
class ResidualEvaluator {
 public:
  ResidualEvaluator(const ProblemState& state,
                    const ObservationTable& observations,
                    const PriorTargets& targets, const SolverConfig& config,
                    const QuadParams& quad);
  ~ResidualEvaluator();

  int parameter_count() const;
  int residual_count() const;
  bool has_latent_blocks() const;

  // Raw (unweighted, non-robustified) residual stack at the construction
  // state offset by delta; candidate choices stay frozen.
  Eigen::VectorXd residuals(const Eigen::VectorXd& delta) const;
  Eigen::VectorXd residuals() const;

  // Analytic Jacobian of residuals() at delta = 0, dense (test use).
  Eigen::MatrixXd dense_jacobian() const;

  // Parameter-block structure per residual, for sparsity inspection.
  // Family: 'r' reprojection, 'c' dynamics consistency, 'p' position
  // target, 'a' latent anchor. Block type: 'C' camera, 'X' point,
  // 'G' latent.
  struct ResidualInfo {
    char family;
    std::vector<std::pair<char, int>> blocks;
  };
  std::vector<ResidualInfo> structure() const;

  // State with the parameter step applied (rotation via exponential map).
  ProblemState apply_step(const ProblemState& base,
                          const Eigen::VectorXd& delta) const;

  // Energy of an arbitrary trial state under the frozen predictor
  // constants and targets (candidate choice re-minimized).
  EnergyBreakdown energy(const ProblemState& trial) const;

  // One damped normal-equation solve (robust-weighted Gauss-Newton step),
  // exploiting the latent -> point -> camera elimination order.
  // Throws LinearSolveFailure when the damped system is singular.
  Eigen::VectorXd solve_step(double damping) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct StepResult {
  bool accepted = false;
  int attempts = 0;
  double damping = 0.0;  // damping after the step
  EnergyBreakdown before;
  EnergyBreakdown after;
};

// One LM step: solve, apply, accept iff the total energy decreases;
// otherwise raise the damping and retry, up to lm.max_retries attempts.
StepResult lm_step(ProblemState& state, const ResidualEvaluator& evaluator,
                   const LmSettings& settings, double& damping);

struct TraceRow {
  int iteration = 0;
  bool accepted = false;
  int attempts = 0;
  double damping = 0.0;
  EnergyBreakdown before;
  EnergyBreakdown after;
};

struct OptimizeResult {
  std::vector<Camera> cameras;
  Trajectory trajectory;
  LatentSequence latent;      // re-derived as G(trajectory) at the end
  ControlSequence controls;
  Assignment assignment;
  std::vector<TraceRow> trace;
};

// Outer loop: per iteration the prior targets are rebuilt from the current
// trajectory, the latent blocks are re-seeded from it, and one accepted LM
// step is taken. Non-convergence is not an error; the best state found is
// returned together with the energy trace.
OptimizeResult optimize(const ObservationTable& observations,
                        const std::vector<Camera>& cameras0,
                        const Trajectory& x0, const SolverConfig& config,
                        const QuadParams& quad);

}  // namespace skytrack
