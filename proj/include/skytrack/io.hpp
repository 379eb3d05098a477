// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skytrack/evaluation.hpp"
#include "skytrack/simulator.hpp"
#include "skytrack/solver.hpp"

namespace skytrack {

// Scene file payload: frame rate, quadrotor constants, flight volume, and
// the camera rig. Files parse strictly (unknown keys rejected) and
// re-serialize byte-identically.
struct SceneData {
  int schema_version = 1;
  double fps = 30.0;
  QuadParams quad;
  Box volume;
  std::vector<Camera> cameras;
};

std::string format_double(double value);  // 17 significant digits

void write_scene(const std::filesystem::path& path, const SceneData& scene);
SceneData read_scene(const std::filesystem::path& path);

void write_detections(const std::filesystem::path& path,
                      const ObservationTable& table);
ObservationTable read_detections(const std::filesystem::path& path);

void write_trajectory(const std::filesystem::path& path,
                      const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path, double dt);

void write_latent(const std::filesystem::path& path,
                  const LatentSequence& latent);
LatentSequence read_latent(const std::filesystem::path& path);

void write_controls(const std::filesystem::path& path,
                    const ControlSequence& controls);
ControlSequence read_controls(const std::filesystem::path& path);

void write_assignment(const std::filesystem::path& path,
                      const Assignment& assignment);
Assignment read_assignment(const std::filesystem::path& path);

void write_energy_trace(const std::filesystem::path& path,
                        const std::vector<TraceRow>& trace);

void write_sweep_rows(const std::filesystem::path& path,
                      const SweepResult& result);
SweepResult read_sweep_rows(const std::filesystem::path& path);

void write_sweep_summary(const std::filesystem::path& path,
                         const SweepResult& result);

void write_sensitivity_table(const std::filesystem::path& path,
                             const std::vector<SensitivityCell>& cells);
std::vector<SensitivityCell> read_sensitivity_table(
    const std::filesystem::path& path);

void write_metrics(const std::filesystem::path& path,
                   const TrajectoryMetrics& metrics,
                   const std::optional<ControlMetrics>& control = std::nullopt);

// Simulation config (strict JSON; unknown keys rejected, missing keys take
// defaults; quad.dt is derived from fps).
SimConfig read_sim_config(const std::filesystem::path& path);

// Sweep description: scene config plus the experiment axes.
struct SweepSpec {
  std::string mode = "methods";  // methods | noise | sensitivity
  SimConfig scene;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<double> sigma_p_grid;
  std::vector<double> sigma_o_grid;
  std::vector<double> lambda_grid;
  std::vector<double> sigma_grid;
  RunConfig run;
};
SweepSpec read_sweep_spec(const std::filesystem::path& path);

// FNV-1a over the file bytes; used by run manifests and reproducibility
// checks.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

// Every CLI run records its command, seed, configuration echo, and the
// hashes of the artifacts it wrote.
void write_manifest(const std::filesystem::path& out_dir,
                    const std::string& command, std::uint64_t seed,
                    const std::string& config_echo,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace skytrack
