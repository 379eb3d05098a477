// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "skytrack/random.hpp"

namespace skytrack {

namespace {

constexpr std::uint64_t kRenderRealizationSalt = 11;
constexpr std::uint64_t kPerturbRealizationSalt = 12;
constexpr std::uint64_t kInitRealizationSalt = 13;
constexpr std::uint64_t kX0NoiseSalt = 14;

double mean_of(const std::vector<double>& values) {
  if (values.empty()) {
    return 0.0;
  }
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) {
    return 0.0;
  }
  return cov / std::sqrt(va * vb);
}

double rmse_of(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

TrajectoryMetrics trajectory_metrics(const Trajectory& estimate,
                                     const Trajectory& reference) {
  if (estimate.size() != reference.size()) {
    throw LengthMismatch("trajectory metrics need equal lengths");
  }
  const SimilarityTransform transform =
      align_similarity(estimate.positions, reference.positions);

  TrajectoryMetrics out;
  out.per_point_errors.resize(estimate.positions.size());
  double acc = 0.0;
  for (size_t i = 0; i < estimate.positions.size(); ++i) {
    const double err =
        (transform.apply(estimate.positions[i]) - reference.positions[i]).norm();
    out.per_point_errors[i] = err;
    acc += err * err;
  }
  out.rmse = std::sqrt(acc / static_cast<double>(estimate.positions.size()));

  for (int i = 0; i <= 100; ++i) {
    const double threshold = 0.05 * i;
    const auto count =
        std::count_if(out.per_point_errors.begin(), out.per_point_errors.end(),
                      [&](double e) { return e <= threshold; });
    out.threshold_curve.emplace_back(
        threshold,
        static_cast<double>(count) /
            static_cast<double>(out.per_point_errors.size()));
  }
  return out;
}

double high_frequency_energy(const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  if (n < 4) {
    return 0.0;
  }
  const double mean = mean_of(series);
  double energy = 0.0;
  // One-sided bins strictly above quarter-Nyquist: k/n > 1/8.
  for (int k = n / 8 + 1; k <= n / 2; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (int t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * k * t / n;
      re += (series[t] - mean) * std::cos(angle);
      im += (series[t] - mean) * std::sin(angle);
    }
    energy += re * re + im * im;
  }
  return energy;
}

ControlMetrics control_metrics(const LatentSequence& estimate,
                               const LatentSequence& reference) {
  if (estimate.size() != reference.size()) {
    throw LengthMismatch("control metrics need equal lengths");
  }
  ControlMetrics out;
  out.rmse_u = rmse_of(estimate.u, reference.u);
  out.rmse_phi = rmse_of(estimate.phi, reference.phi);
  out.rmse_theta = rmse_of(estimate.theta, reference.theta);
  out.correlation_u = pearson(estimate.u, reference.u);
  out.hf_energy_u = high_frequency_energy(estimate.u);
  return out;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kNoOpt: return "No-Opt";
    case Method::kBA: return "BA";
    case Method::kBApGS: return "BA-pGS";
    case Method::kBApSS: return "BA-pSS";
    case Method::kBApKF: return "BA-pKF";
    case Method::kBApDM: return "BA-pDM";
    case Method::kBApDMSingle: return "BA-pDM-single";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kNoOpt, Method::kBA, Method::kBApGS, Method::kBApSS,
                   Method::kBApKF, Method::kBApDM, Method::kBApDMSingle}) {
    if (method_name(m) == name) {
      return m;
    }
  }
  throw ParseError("unknown method '" + name + "'");
}

double SweepResult::mean_rmse(Method method) const {
  std::vector<double> values;
  for (const SweepRow& row : rows) {
    if (row.method == method) {
      values.push_back(row.rmse);
    }
  }
  return mean_of(values);
}

double SweepResult::mean_rmse(Method method, double sigma_p,
                              double sigma_o) const {
  std::vector<double> values;
  for (const SweepRow& row : rows) {
    if (row.method == method && row.sigma_p == sigma_p &&
        row.sigma_o == sigma_o) {
      values.push_back(row.rmse);
    }
  }
  return mean_of(values);
}

double SweepResult::std_rmse(Method method) const {
  std::vector<double> values;
  for (const SweepRow& row : rows) {
    if (row.method == method) {
      values.push_back(row.rmse);
    }
  }
  if (values.size() < 2) {
    return 0.0;
  }
  const double mean = mean_of(values);
  double acc = 0.0;
  for (double v : values) {
    acc += (v - mean) * (v - mean);
  }
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

namespace {

SolverConfig method_solver_config(Method method, const RunConfig& config) {
  SolverConfig solver = config.solver;
  switch (method) {
    case Method::kNoOpt:
      break;
    case Method::kBA:
      solver.prior.kind = PriorKind::kNone;
      solver.lambda = 0.0;
      break;
    case Method::kBApGS:
      solver.prior.kind = PriorKind::kGaussianSmooth;
      break;
    case Method::kBApSS:
      solver.prior.kind = PriorKind::kSplineSmooth;
      break;
    case Method::kBApKF:
      solver.prior.kind = PriorKind::kKalmanCA;
      break;
    case Method::kBApDM:
    case Method::kBApDMSingle:
      solver.prior.kind = PriorKind::kDynamics;
      break;
  }
  return solver;
}

struct Realization {
  ObservationTable observations;
  std::vector<Camera> cameras_initial;
  InitializationResult init;
};

Realization realize(const SimConfig& scene, const GroundTruth& truth,
                    std::uint64_t seed, const RunConfig& config) {
  Realization out;
  RenderResult rendered = render_detections(
      truth.x_gt, truth.cameras_gt, scene.noise,
      mix_seed(seed, kRenderRealizationSalt), scene.candidate_cap);
  out.observations = std::move(rendered.table);
  out.cameras_initial = perturb_cameras(truth.cameras_gt, scene.perturb,
                                        mix_seed(seed, kPerturbRealizationSalt));

  InitializationConfig init_cfg;
  init_cfg.dt = 1.0 / scene.fps;
  init_cfg.ransac.iterations = config.ransac_iterations;
  init_cfg.ransac.loss = config.solver.pixel_loss;
  init_cfg.ransac.seed = mix_seed(seed, kInitRealizationSalt);
  out.init =
      initialize_trajectory(out.observations, out.cameras_initial, init_cfg);

  if (config.init_position_noise > 0.0) {
    Rng rng(mix_seed(seed, kX0NoiseSalt));
    for (Vector3d& p : out.init.trajectory.positions) {
      p += Vector3d(rng.normal(0.0, config.init_position_noise),
                    rng.normal(0.0, config.init_position_noise),
                    rng.normal(0.0, config.init_position_noise));
    }
  }
  return out;
}

}  // namespace

MethodRun run_single_method(const SimConfig& scene, Method method,
                            std::uint64_t seed, const RunConfig& config) {
  const FlightResult flight = generate_flight(scene);
  GroundTruth truth;
  truth.x_gt = flight.trajectory;
  truth.latent_gt = flight.latent;
  truth.cameras_gt = place_cameras(scene);

  const auto start = std::chrono::steady_clock::now();
  Realization realization = realize(scene, truth, seed, config);

  MethodRun run;
  if (method == Method::kNoOpt) {
    run.result.trajectory = realization.init.trajectory;
    run.result.cameras = realization.cameras_initial;
    run.result.latent =
        trajectory_to_latent(realization.init.trajectory, scene.quad).first;
    run.result.controls = control_inputs(run.result.latent, scene.quad);
    run.result.assignment = realization.init.assignment;
  } else {
    const SolverConfig solver = method_solver_config(method, config);
    const ObservationTable* observations = &realization.observations;
    ObservationTable restricted;
    if (method == Method::kBApDMSingle) {
      restricted = restrict_to_assignment(realization.observations,
                                          realization.init.assignment);
      observations = &restricted;
    }
    run.result = optimize(*observations, realization.cameras_initial,
                          realization.init.trajectory, solver, scene.quad);
  }
  run.runtime_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  run.metrics = trajectory_metrics(run.result.trajectory, truth.x_gt);
  return run;
}

SweepResult run_method_suite(const SimConfig& scene,
                             const std::vector<Method>& methods,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& config) {
  SweepResult out;
  for (std::uint64_t seed : seeds) {
    for (Method method : methods) {
      const MethodRun run = run_single_method(scene, method, seed, config);
      out.rows.push_back({method, scene.perturb.sigma_position,
                          scene.perturb.sigma_orientation_deg, seed,
                          run.metrics.rmse, run.runtime_s});
    }
  }
  return out;
}

SweepResult noise_sweep(const SimConfig& scene,
                        const std::vector<double>& sigma_p_grid,
                        const std::vector<double>& sigma_o_grid,
                        const std::vector<Method>& methods,
                        const std::vector<std::uint64_t>& seeds,
                        const RunConfig& config) {
  SweepResult out;
  for (double sigma_p : sigma_p_grid) {
    for (double sigma_o : sigma_o_grid) {
      SimConfig cell = scene;
      cell.perturb.sigma_position = sigma_p;
      cell.perturb.sigma_orientation_deg = sigma_o;
      const SweepResult cell_result =
          run_method_suite(cell, methods, seeds, config);
      out.rows.insert(out.rows.end(), cell_result.rows.begin(),
                      cell_result.rows.end());
    }
  }
  return out;
}

std::vector<SensitivityCell> prior_sensitivity_sweep(
    const SimConfig& scene, const std::vector<double>& lambda_grid,
    const std::vector<double>& sigma_grid,
    const std::vector<std::uint64_t>& seeds, const RunConfig& config) {
  const FlightResult flight = generate_flight(scene);

  std::vector<SensitivityCell> out;
  for (size_t i = 0; i < lambda_grid.size(); ++i) {
    for (size_t j = 0; j < sigma_grid.size(); ++j) {
      SensitivityCell cell;
      cell.lambda = lambda_grid[i];
      cell.sigma = sigma_grid[j];
      RunConfig cell_config = config;
      cell_config.solver.lambda = cell.lambda;
      cell_config.solver.prior.sigma_latent = cell.sigma;

      double rmse_acc = 0.0;
      ControlMetrics acc;
      for (std::uint64_t seed : seeds) {
        const MethodRun run =
            run_single_method(scene, Method::kBApDM, seed, cell_config);
        const ControlMetrics m =
            control_metrics(run.result.latent, flight.latent);
        acc.rmse_u += m.rmse_u;
        acc.rmse_phi += m.rmse_phi;
        acc.rmse_theta += m.rmse_theta;
        acc.correlation_u += m.correlation_u;
        acc.hf_energy_u += m.hf_energy_u;
        rmse_acc += run.metrics.rmse;
      }
      const double inv = 1.0 / static_cast<double>(seeds.size());
      cell.metrics = {acc.rmse_u * inv, acc.rmse_phi * inv,
                      acc.rmse_theta * inv, acc.correlation_u * inv,
                      acc.hf_energy_u * inv};
      cell.rmse = rmse_acc * inv;
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace skytrack
