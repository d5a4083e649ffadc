#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace decom {

// One evaluation-point row of the metrics CSV. Schema:
//   episode, seed, variant, reward_mean, reward_std, cost_1..cost_M,
//   violation_1..violation_M, td_loss_r, td_loss_c, phi_loss,
//   grad_norm_theta, grad_norm_phi
struct MetricsRow {
  std::int64_t episode = 0;
  std::uint64_t seed = 0;
  std::string variant;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::vector<double> costs;
  std::vector<double> violations;
  double td_loss_r = 0.0;
  double td_loss_c = 0.0;
  double phi_loss = 0.0;
  double grad_norm_theta = 0.0;
  double grad_norm_phi = 0.0;
};

std::string metrics_header(int cost_count);
std::string format_metrics_row(const MetricsRow& row);

void write_metrics_csv(const std::string& path, int cost_count,
                       const std::vector<MetricsRow>& rows);

// Throws with the list of missing columns on schema mismatch.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Static SVG line charts over metric histories, one file per metric, with
// multi-variant overlays and optional horizontal bound lines. Rendering is
// deterministic: identical inputs give identical bytes.

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

void render_line_chart_svg(const std::string& path, const std::string& title,
                           const std::vector<PlotSeries>& series, double bound_line,
                           bool has_bound);

// Convenience: renders reward and per-cost charts (bound lines at D_j) from
// metrics files into out_dir, returns the written file names.
std::vector<std::string> plot_metrics(const std::vector<std::string>& csv_paths,
                                      const std::vector<double>& bounds,
                                      const std::string& out_dir);

}  // namespace decom
