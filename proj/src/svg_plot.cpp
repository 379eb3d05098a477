// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace skytrack {

namespace {

const char* kSeriesColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                               "#9467bd", "#8c564b", "#e377c2"};

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

struct Frame {
  // Plot area inside the canvas.
  double x0 = 70.0, y0 = 40.0, x1 = 740.0, y1 = 420.0;
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;

  double px(double x) const {
    return x0 + (x - min_x) / (max_x - min_x) * (x1 - x0);
  }
  double py(double y) const {
    return y1 - (y - min_y) / (max_y - min_y) * (y1 - y0);
  }

  void draw_axes(SvgCanvas& canvas, const std::string& x_label,
                 const std::string& y_label) const {
    canvas.line(x0, y1, x1, y1, "#000000");
    canvas.line(x0, y0, x0, y1, "#000000");
    for (int i = 0; i <= 4; ++i) {
      const double fx = min_x + (max_x - min_x) * i / 4.0;
      const double fy = min_y + (max_y - min_y) * i / 4.0;
      canvas.line(px(fx), y1, px(fx), y1 + 4, "#000000");
      canvas.text(px(fx), y1 + 16, fmt(fx), 10.0, "middle");
      canvas.line(x0 - 4, py(fy), x0, py(fy), "#000000");
      canvas.text(x0 - 6, py(fy) + 3, fmt(fy), 10.0, "end");
    }
    canvas.text((x0 + x1) / 2.0, y1 + 32, x_label, 12.0, "middle");
    canvas.text(x0, y0 - 8, y_label, 12.0, "start");
  }
};

}  // namespace

SvgCanvas::SvgCanvas(double width, double height)
    : width_(width), height_(height) {}

void SvgCanvas::line(double x1, double y1, double x2, double y2,
                     const std::string& color, double stroke_width) {
  body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" +
           fmt(x2) + "\" y2=\"" + fmt(y2) + "\" stroke=\"" + color +
           "\" stroke-width=\"" + fmt(stroke_width) + "\"/>\n";
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& points,
                         const std::string& color, double stroke_width) {
  std::string coords;
  for (const auto& [x, y] : points) {
    coords += fmt(x) + "," + fmt(y) + " ";
  }
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           fmt(stroke_width) + "\" points=\"" + coords + "\"/>\n";
}

void SvgCanvas::rect(double x, double y, double w, double h,
                     const std::string& fill) {
  body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" +
           fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content,
                     double font_size, const std::string& anchor) {
  body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" +
           fmt(font_size) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\">" + content + "</text>\n";
}

void SvgCanvas::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << " "
      << height_ << "\">\n<rect width=\"100%\" height=\"100%\" "
      << "fill=\"#ffffff\"/>\n"
      << body_ << "</svg>\n";
}

void plot_rmse_curves(const SweepResult& result,
                      const std::filesystem::path& path) {
  // Cells ordered by (sigma_p, sigma_o); x axis is the cell rank.
  std::set<std::pair<double, double>> cell_set;
  std::vector<Method> methods;
  std::set<std::string> seen;
  for (const SweepRow& row : result.rows) {
    cell_set.insert({row.sigma_p, row.sigma_o});
    if (seen.insert(method_name(row.method)).second) {
      methods.push_back(row.method);
    }
  }
  const std::vector<std::pair<double, double>> cells(cell_set.begin(),
                                                     cell_set.end());

  double max_rmse = 1e-9;
  for (const SweepRow& row : result.rows) {
    max_rmse = std::max(max_rmse, row.rmse);
  }

  SvgCanvas canvas(800, 480);
  Frame frame;
  frame.max_x = std::max<double>(1.0, cells.size() - 1.0);
  frame.max_y = 1.1 * max_rmse;
  frame.draw_axes(canvas, "noise cell (sigma_p, sigma_o rank)", "RMSE [m]");

  for (size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<std::pair<double, double>> pts;
    for (size_t ci = 0; ci < cells.size(); ++ci) {
      const double mean =
          result.mean_rmse(methods[mi], cells[ci].first, cells[ci].second);
      pts.emplace_back(frame.px(static_cast<double>(ci)), frame.py(mean));
    }
    const std::string color = kSeriesColors[mi % 7];
    canvas.polyline(pts, color);
    canvas.text(frame.x1 - 120, frame.y0 + 16.0 * (mi + 1),
                method_name(methods[mi]), 11.0);
    canvas.line(frame.x1 - 150, frame.y0 + 16.0 * (mi + 1) - 4,
                frame.x1 - 126, frame.y0 + 16.0 * (mi + 1) - 4, color, 2.0);
  }
  canvas.save(path);
}

void plot_heatmap(const SweepResult& result, Method method,
                  const std::filesystem::path& path) {
  std::set<double> sp_set;
  std::set<double> so_set;
  for (const SweepRow& row : result.rows) {
    if (row.method == method) {
      sp_set.insert(row.sigma_p);
      so_set.insert(row.sigma_o);
    }
  }
  const std::vector<double> sps(sp_set.begin(), sp_set.end());
  const std::vector<double> sos(so_set.begin(), so_set.end());
  if (sps.empty() || sos.empty()) {
    throw Error("no rows for method " + method_name(method));
  }

  double max_rmse = 1e-9;
  for (const SweepRow& row : result.rows) {
    if (row.method == method) {
      max_rmse = std::max(max_rmse, row.rmse);
    }
  }

  SvgCanvas canvas(800, 480);
  const double x0 = 80, y0 = 60, cell_w = 600.0 / sps.size(),
               cell_h = 340.0 / sos.size();
  canvas.text(400, 30, "mean RMSE heatmap: " + method_name(method), 14.0,
              "middle");
  for (size_t i = 0; i < sps.size(); ++i) {
    for (size_t j = 0; j < sos.size(); ++j) {
      const double mean = result.mean_rmse(method, sps[i], sos[j]);
      const double f = std::clamp(mean / max_rmse, 0.0, 1.0);
      const int red = static_cast<int>(255 * f);
      const int blue = static_cast<int>(255 * (1.0 - f));
      char color[8];
      std::snprintf(color, sizeof(color), "#%02x00%02x", red, blue);
      const double x = x0 + i * cell_w;
      const double y = y0 + (sos.size() - 1 - j) * cell_h;
      canvas.rect(x, y, cell_w - 2, cell_h - 2, color);
      std::ostringstream label;
      label.precision(3);
      label << mean;
      canvas.text(x + cell_w / 2, y + cell_h / 2, label.str(), 11.0, "middle");
    }
  }
  for (size_t i = 0; i < sps.size(); ++i) {
    std::ostringstream label;
    label << "sp=" << sps[i];
    canvas.text(x0 + i * cell_w + cell_w / 2, y0 + 360, label.str(), 11.0,
                "middle");
  }
  for (size_t j = 0; j < sos.size(); ++j) {
    std::ostringstream label;
    label << "so=" << sos[j];
    canvas.text(x0 - 8, y0 + (sos.size() - 1 - j) * cell_h + cell_h / 2,
                label.str(), 11.0, "end");
  }
  canvas.save(path);
}

void plot_control_overlay(const LatentSequence& estimate,
                          const LatentSequence& reference, double dt,
                          const std::filesystem::path& path) {
  if (estimate.size() != reference.size()) {
    throw LengthMismatch("control overlay needs equal lengths");
  }
  double min_u = reference.u[0];
  double max_u = reference.u[0];
  for (int t = 0; t < reference.size(); ++t) {
    min_u = std::min({min_u, reference.u[t], estimate.u[t]});
    max_u = std::max({max_u, reference.u[t], estimate.u[t]});
  }
  const double pad = 0.05 * std::max(1e-9, max_u - min_u);

  SvgCanvas canvas(800, 480);
  Frame frame;
  frame.max_x = (reference.size() - 1) * dt;
  frame.min_y = min_u - pad;
  frame.max_y = max_u + pad;
  frame.draw_axes(canvas, "time [s]", "throttle [N]");

  auto series = [&](const std::vector<double>& u, const char* color) {
    std::vector<std::pair<double, double>> pts;
    for (size_t t = 0; t < u.size(); ++t) {
      pts.emplace_back(frame.px(t * dt), frame.py(u[t]));
    }
    canvas.polyline(pts, color);
  };
  series(reference.u, "#d62728");
  series(estimate.u, "#1f77b4");
  canvas.text(frame.x1 - 150, frame.y0 + 16, "reference", 11.0);
  canvas.line(frame.x1 - 180, frame.y0 + 12, frame.x1 - 156, frame.y0 + 12,
              "#d62728", 2.0);
  canvas.text(frame.x1 - 150, frame.y0 + 32, "estimate", 11.0);
  canvas.line(frame.x1 - 180, frame.y0 + 28, frame.x1 - 156, frame.y0 + 28,
              "#1f77b4", 2.0);
  canvas.save(path);
}

}  // namespace skytrack
