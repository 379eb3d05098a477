// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skytrack/evaluation.hpp"

namespace skytrack {

// Minimal vector-graphics output: axes, polylines, labels. No plotting
// dependency so results render anywhere.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  void line(double x1, double y1, double x2, double y2,
            const std::string& color, double stroke_width = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& color, double stroke_width = 1.5);
  void rect(double x, double y, double w, double h, const std::string& fill);
  void text(double x, double y, const std::string& content,
            double font_size = 12.0, const std::string& anchor = "start");
  void save(const std::filesystem::path& path) const;

 private:
  double width_;
  double height_;
  std::string body_;
};

// Mean-RMSE-per-method lines over the sweep cells (cells ordered by noise).
void plot_rmse_curves(const SweepResult& result,
                      const std::filesystem::path& path);

// Mean-RMSE heatmap over the (sigma_p, sigma_o) grid for one method.
void plot_heatmap(const SweepResult& result, Method method,
                  const std::filesystem::path& path);

// Estimated vs. reference throttle signal over time.
void plot_control_overlay(const LatentSequence& estimate,
                          const LatentSequence& reference, double dt,
                          const std::filesystem::path& path);

}  // namespace skytrack
