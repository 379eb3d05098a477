// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skytrack/simulator.hpp"
#include "skytrack/solver.hpp"

namespace skytrack {

struct TrajectoryMetrics {
  double rmse = 0.0;  // m, after robust similarity alignment
  std::vector<double> per_point_errors;
  // (threshold m, fraction of points with error <= threshold), 0.05 m steps
  std::vector<std::pair<double, double>> threshold_curve;
};

// Aligns estimate -> reference robustly, then measures per-point errors.
TrajectoryMetrics trajectory_metrics(const Trajectory& estimate,
                                     const Trajectory& reference);

struct ControlMetrics {
  double rmse_u = 0.0;
  double rmse_phi = 0.0;
  double rmse_theta = 0.0;
  double correlation_u = 0.0;  // Pearson
  double hf_energy_u = 0.0;    // spectral energy above quarter-Nyquist
};

// Spectral energy of the mean-removed series above a quarter of the Nyquist
// frequency (naive DFT; series are short).
double high_frequency_energy(const std::vector<double>& series);

ControlMetrics control_metrics(const LatentSequence& estimate,
                               const LatentSequence& reference);

// The method ladder compared throughout the experiments.
enum class Method { kNoOpt, kBA, kBApGS, kBApSS, kBApKF, kBApDM, kBApDMSingle };

std::string method_name(Method method);
Method parse_method(const std::string& name);

struct RunConfig {
  SolverConfig solver;          // prior kind/λ overridden per method
  int ransac_iterations = 200;
  double init_position_noise = 0.0;  // i.i.d. noise added to X0, m
};

struct SweepRow {
  Method method = Method::kNoOpt;
  double sigma_p = 0.0;
  double sigma_o = 0.0;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double runtime_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  double mean_rmse(Method method) const;
  double mean_rmse(Method method, double sigma_p, double sigma_o) const;
  double std_rmse(Method method) const;
};

// Runs every method on identical per-seed noise realizations of the scene:
// per seed the detections, camera perturbation, initialization, and optional
// X0 noise are re-drawn from sub-seeds; the flight and camera rig are fixed
// by the scene seed. No-Opt reports the triangulation output; BA-pDM-single
// restricts each candidate set to the initialization assignment first.
SweepResult run_method_suite(const SimConfig& scene,
                             const std::vector<Method>& methods,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& config);

// Method suite across a (sigma_p x sigma_o) camera-noise grid.
SweepResult noise_sweep(const SimConfig& scene,
                        const std::vector<double>& sigma_p_grid,
                        const std::vector<double>& sigma_o_grid,
                        const std::vector<Method>& methods,
                        const std::vector<std::uint64_t>& seeds,
                        const RunConfig& config);

struct SensitivityCell {
  double lambda = 0.0;
  double sigma = 0.0;
  ControlMetrics metrics;
  double rmse = 0.0;
};

// BA-pDM over a (lambda, sigma) grid on one scene; control metrics per cell
// (averaged over seeds).
std::vector<SensitivityCell> prior_sensitivity_sweep(
    const SimConfig& scene, const std::vector<double>& lambda_grid,
    const std::vector<double>& sigma_grid,
    const std::vector<std::uint64_t>& seeds, const RunConfig& config);

// One method run on one seeded realization; exposed for the CLI and tests.
struct MethodRun {
  OptimizeResult result;   // trajectory/cameras/latent/controls
  TrajectoryMetrics metrics;
  double runtime_s = 0.0;
};
MethodRun run_single_method(const SimConfig& scene, Method method,
                            std::uint64_t seed, const RunConfig& config);

}  // namespace skytrack
