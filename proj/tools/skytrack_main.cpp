// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: simulate, triangulate, optimize, evaluate, sweep,
// plot. Every run writes a manifest with the seed, config echo, and hashes
// of the artifacts it produced; identical inputs and seed give bit-identical
// outputs.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "skytrack/evaluation.hpp"
#include "skytrack/io.hpp"
#include "skytrack/simulator.hpp"
#include "skytrack/solver.hpp"
#include "skytrack/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace skytrack;

namespace {

bool log_enabled() {
  const char* env = std::getenv("SKYTRACK_LOG");
  return env != nullptr && std::string(env) != "" && std::string(env) != "0";
}

void log_line(const std::string& message) {
  if (log_enabled()) {
    std::cerr << "[skytrack] " << message << "\n";
  }
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
};

int run_simulate(const SimulateArgs& args) {
  SimConfig cfg = read_sim_config(args.config_path);
  if (args.seed_override) {
    cfg.seed = *args.seed_override;
  }
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  log_line("simulating " + std::to_string(cfg.frames) + " frames, " +
           std::to_string(cfg.n_cameras) + " cameras, seed " +
           std::to_string(cfg.seed));
  const SimulatedScene scene = simulate_scene(cfg);

  SceneData init_scene{1, cfg.fps, cfg.quad, cfg.volume, scene.cameras_initial};
  SceneData gt_scene{1, cfg.fps, cfg.quad, cfg.volume, scene.truth.cameras_gt};
  write_scene(out / "scene.json", init_scene);
  write_scene(out / "scene_gt.json", gt_scene);
  write_detections(out / "detections.csv", scene.observations);
  write_trajectory(out / "trajectory_gt.csv", scene.truth.x_gt);
  write_latent(out / "latent_gt.csv", scene.truth.latent_gt);
  write_controls(out / "controls_gt.csv", scene.truth.controls_gt);
  write_assignment(out / "assignment_gt.csv", scene.truth.assignment_gt);
  write_manifest(out, "simulate", cfg.seed, args.config_path,
                 {out / "scene.json", out / "scene_gt.json",
                  out / "detections.csv", out / "trajectory_gt.csv",
                  out / "latent_gt.csv", out / "controls_gt.csv",
                  out / "assignment_gt.csv"});
  return 0;
}

struct TriangulateArgs {
  std::string scene_path;
  std::string detections_path;
  std::string out_dir;
  int ransac_iterations = 200;
  std::uint64_t seed = 0;
};

int run_triangulate(const TriangulateArgs& args) {
  const SceneData scene = read_scene(args.scene_path);
  const ObservationTable table = read_detections(args.detections_path);
  if (table.num_cameras() != static_cast<int>(scene.cameras.size())) {
    throw ParseError("detections reference " +
                     std::to_string(table.num_cameras()) +
                     " cameras but the scene has " +
                     std::to_string(scene.cameras.size()));
  }

  InitializationConfig cfg;
  cfg.dt = 1.0 / scene.fps;
  cfg.ransac.iterations = args.ransac_iterations;
  cfg.ransac.seed = args.seed;
  log_line("triangulating " + std::to_string(table.num_frames()) + " frames");
  const InitializationResult init =
      initialize_trajectory(table, scene.cameras, cfg);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_trajectory(out / "trajectory_init.csv", init.trajectory);
  write_assignment(out / "assignment_init.csv", init.assignment);
  write_manifest(out, "triangulate", args.seed, args.scene_path,
                 {out / "trajectory_init.csv", out / "assignment_init.csv"});
  return 0;
}

struct OptimizeArgs {
  std::string scene_path;
  std::string detections_path;
  std::string init_path;
  std::string out_dir;
  std::string prior = "dm";
  bool single_detection = false;
  std::string assignment_path;
  SolverConfig solver;
};

int run_optimize(const OptimizeArgs& args) {
  const SceneData scene = read_scene(args.scene_path);
  ObservationTable table = read_detections(args.detections_path);
  const Trajectory x0 = read_trajectory(args.init_path, 1.0 / scene.fps);
  if (x0.size() != table.num_frames()) {
    throw ParseError("initial trajectory has " + std::to_string(x0.size()) +
                     " frames but detections have " +
                     std::to_string(table.num_frames()));
  }

  SolverConfig solver = args.solver;
  solver.prior.kind = parse_prior_kind(args.prior);
  if (args.single_detection) {
    if (args.assignment_path.empty()) {
      throw Error("--single-detection requires --assignment");
    }
    const Assignment assignment = read_assignment(args.assignment_path);
    table = restrict_to_assignment(table, assignment);
  }

  log_line("optimizing with prior '" + args.prior + "', lambda " +
           format_double(solver.lambda));
  const OptimizeResult result =
      optimize(table, scene.cameras, x0, solver, scene.quad);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_trajectory(out / "trajectory_opt.csv", result.trajectory);
  write_latent(out / "latent_opt.csv", result.latent);
  write_controls(out / "controls_opt.csv", result.controls);
  SceneData out_scene{1, scene.fps, scene.quad, scene.volume, result.cameras};
  write_scene(out / "cameras_opt.json", out_scene);
  write_energy_trace(out / "energy_trace.csv", result.trace);
  write_manifest(out, "optimize", 0, args.scene_path + " prior=" + args.prior,
                 {out / "trajectory_opt.csv", out / "latent_opt.csv",
                  out / "controls_opt.csv", out / "cameras_opt.json",
                  out / "energy_trace.csv"});
  return 0;
}

struct EvaluateArgs {
  std::string estimate_path;
  std::string reference_path;
  std::string out_dir;
  std::string est_latent_path;
  std::string ref_latent_path;
  double fps = 30.0;
};

int run_evaluate(const EvaluateArgs& args) {
  const double dt = 1.0 / args.fps;
  const Trajectory estimate = read_trajectory(args.estimate_path, dt);
  const Trajectory reference = read_trajectory(args.reference_path, dt);
  const TrajectoryMetrics metrics = trajectory_metrics(estimate, reference);

  std::optional<ControlMetrics> control;
  if (!args.est_latent_path.empty() && !args.ref_latent_path.empty()) {
    control = control_metrics(read_latent(args.est_latent_path),
                              read_latent(args.ref_latent_path));
  }

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_metrics(out / "metrics.json", metrics, control);
  write_manifest(out, "evaluate", 0, args.estimate_path,
                 {out / "metrics.json"});
  log_line("rmse " + format_double(metrics.rmse) + " m");
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::string out_dir;
};

int run_sweep(const SweepArgs& args) {
  const SweepSpec spec = read_sweep_spec(args.config_path);
  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  std::vector<fs::path> outputs;
  if (spec.mode == "sensitivity") {
    log_line("sensitivity sweep: " + std::to_string(spec.lambda_grid.size()) +
             " x " + std::to_string(spec.sigma_grid.size()) + " cells");
    const auto cells = prior_sensitivity_sweep(
        spec.scene, spec.lambda_grid, spec.sigma_grid, spec.seeds, spec.run);
    write_sensitivity_table(out / "sensitivity.csv", cells);
    outputs.push_back(out / "sensitivity.csv");
  } else {
    SweepResult result;
    if (spec.mode == "noise") {
      log_line("noise sweep: " + std::to_string(spec.sigma_p_grid.size()) +
               " x " + std::to_string(spec.sigma_o_grid.size()) + " cells");
      result = noise_sweep(spec.scene, spec.sigma_p_grid, spec.sigma_o_grid,
                           spec.methods, spec.seeds, spec.run);
    } else {
      log_line("method suite: " + std::to_string(spec.methods.size()) +
               " methods, " + std::to_string(spec.seeds.size()) + " seeds");
      result = run_method_suite(spec.scene, spec.methods, spec.seeds, spec.run);
    }
    write_sweep_rows(out / "results.csv", result);
    write_sweep_summary(out / "summary.txt", result);
    outputs.push_back(out / "results.csv");
    outputs.push_back(out / "summary.txt");
  }
  write_manifest(out, "sweep", spec.scene.seed, args.config_path, outputs);
  return 0;
}

struct PlotArgs {
  std::string kind = "curves";
  std::string out_dir;
  std::string name = "plot.svg";
  std::string results_path;
  std::string method = "BA-pDM";
  std::string est_latent_path;
  std::string ref_latent_path;
  double fps = 30.0;
};

int run_plot(const PlotArgs& args) {
  fs::create_directories(args.out_dir);
  const fs::path out = fs::path(args.out_dir) / args.name;
  if (args.kind == "curves" || args.kind == "heatmap") {
    if (args.results_path.empty()) {
      throw Error("--results is required for kind '" + args.kind + "'");
    }
    const SweepResult result = read_sweep_rows(args.results_path);
    if (args.kind == "curves") {
      plot_rmse_curves(result, out);
    } else {
      plot_heatmap(result, parse_method(args.method), out);
    }
  } else if (args.kind == "controls") {
    if (args.est_latent_path.empty() || args.ref_latent_path.empty()) {
      throw Error("--est-latent and --ref-latent are required for 'controls'");
    }
    plot_control_overlay(read_latent(args.est_latent_path),
                         read_latent(args.ref_latent_path), 1.0 / args.fps,
                         out);
  } else {
    throw Error("unknown plot kind '" + args.kind + "'");
  }
  write_manifest(args.out_dir, "plot", 0, args.kind, {out});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrotor trajectory recovery from fixed ground cameras"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Generate a synthetic scene with detections");
  sim_cmd->add_option("--config", sim.config_path, "Scene config JSON")
      ->required();
  sim_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt =
      sim_cmd->add_option("--seed", sim_seed, "Override the config seed");

  TriangulateArgs tri;
  auto* tri_cmd = app.add_subcommand(
      "triangulate", "Initialize a trajectory by RANSAC triangulation");
  tri_cmd->add_option("--scene", tri.scene_path, "Scene JSON")->required();
  tri_cmd->add_option("--detections", tri.detections_path, "Detections CSV")
      ->required();
  tri_cmd->add_option("--out", tri.out_dir, "Output directory")->required();
  tri_cmd->add_option("--ransac-iterations", tri.ransac_iterations,
                      "RANSAC iterations per frame");
  tri_cmd->add_option("--seed", tri.seed, "RANSAC seed");

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand(
      "optimize", "Bundle adjustment with an optional motion prior");
  opt_cmd->add_option("--scene", opt.scene_path, "Scene JSON")->required();
  opt_cmd->add_option("--detections", opt.detections_path, "Detections CSV")
      ->required();
  opt_cmd->add_option("--init", opt.init_path, "Initial trajectory CSV")
      ->required();
  opt_cmd->add_option("--out", opt.out_dir, "Output directory")->required();
  opt_cmd->add_option("--prior", opt.prior, "none|gs|ss|kf|dm");
  opt_cmd->add_flag("--single-detection", opt.single_detection,
                    "Keep only the assigned candidate per frame");
  opt_cmd->add_option("--assignment", opt.assignment_path,
                      "Assignment CSV for --single-detection");
  opt_cmd->add_option("--lambda", opt.solver.lambda, "Prior weight");
  opt_cmd->add_option("--lambda-phi", opt.solver.lambda_phi,
                      "Roll anchor weight");
  opt_cmd->add_option("--lambda-theta", opt.solver.lambda_theta,
                      "Pitch anchor weight");
  opt_cmd->add_option("--lambda-u", opt.solver.lambda_u,
                      "Throttle anchor weight");
  opt_cmd->add_option("--iterations", opt.solver.outer_iterations,
                      "Outer iterations");
  opt_cmd->add_option("--sigma", opt.solver.prior.sigma,
                      "Gaussian prior sigma (samples)");
  opt_cmd->add_option("--knot-spacing", opt.solver.prior.knot_spacing,
                      "Spline knot spacing (samples)");
  opt_cmd->add_option("--kalman-q", opt.solver.prior.kalman_q,
                      "Kalman process noise");
  opt_cmd->add_option("--kalman-r", opt.solver.prior.kalman_r,
                      "Kalman measurement noise");
  opt_cmd->add_option("--sigma-latent", opt.solver.prior.sigma_latent,
                      "Latent smoothing sigma (samples)");
  bool fixed_cameras = false;
  opt_cmd->add_flag("--fixed-cameras", fixed_cameras,
                    "Do not refine camera poses");

  EvaluateArgs eval;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Metrics against a reference trajectory");
  eval_cmd->add_option("--estimate", eval.estimate_path, "Estimate CSV")
      ->required();
  eval_cmd->add_option("--reference", eval.reference_path, "Reference CSV")
      ->required();
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();
  eval_cmd->add_option("--est-latent", eval.est_latent_path,
                       "Estimated latent CSV");
  eval_cmd->add_option("--ref-latent", eval.ref_latent_path,
                       "Reference latent CSV");
  eval_cmd->add_option("--fps", eval.fps, "Frame rate of the files");

  SweepArgs sweep;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run a method/noise/sensitivity sweep");
  sweep_cmd->add_option("--config", sweep.config_path, "Sweep config JSON")
      ->required();
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")
      ->required();

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render results as SVG");
  plot_cmd->add_option("--kind", plot.kind, "curves|heatmap|controls");
  plot_cmd->add_option("--out", plot.out_dir, "Output directory")->required();
  plot_cmd->add_option("--name", plot.name, "Output file name");
  plot_cmd->add_option("--results", plot.results_path, "Sweep results CSV");
  plot_cmd->add_option("--method", plot.method, "Method for heatmaps");
  plot_cmd->add_option("--est-latent", plot.est_latent_path,
                       "Estimated latent CSV");
  plot_cmd->add_option("--ref-latent", plot.ref_latent_path,
                       "Reference latent CSV");
  plot_cmd->add_option("--fps", plot.fps, "Frame rate of the latent files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      if (sim_seed_opt->count() > 0) {
        sim.seed_override = sim_seed;
      }
      return run_simulate(sim);
    }
    if (tri_cmd->parsed()) {
      return run_triangulate(tri);
    }
    if (opt_cmd->parsed()) {
      opt.solver.optimize_cameras = !fixed_cameras;
      return run_optimize(opt);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(eval);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep(sweep);
    }
    if (plot_cmd->parsed()) {
      return run_plot(plot);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
