#include "decom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace decom {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string metrics_header(int cost_count) {
  std::ostringstream os;
  os << "episode,seed,variant,reward_mean,reward_std";
  for (int j = 1; j <= cost_count; ++j) os << ",cost_" << j;
  for (int j = 1; j <= cost_count; ++j) os << ",violation_" << j;
  os << ",td_loss_r,td_loss_c,phi_loss,grad_norm_theta,grad_norm_phi";
  return os.str();
}

std::string format_metrics_row(const MetricsRow& row) {
  std::ostringstream os;
  os << row.episode << "," << row.seed << "," << row.variant << "," << fmt(row.reward_mean)
     << "," << fmt(row.reward_std);
  for (double c : row.costs) os << "," << fmt(c);
  for (double v : row.violations) os << "," << fmt(v);
  os << "," << fmt(row.td_loss_r) << "," << fmt(row.td_loss_c) << "," << fmt(row.phi_loss)
     << "," << fmt(row.grad_norm_theta) << "," << fmt(row.grad_norm_phi);
  return os.str();
}

void write_metrics_csv(const std::string& path, int cost_count,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("metrics: cannot open '" + path + "'");
  os << metrics_header(cost_count) << "\n";
  for (const auto& row : rows) os << format_metrics_row(row) << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("metrics: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("metrics: empty file '" + path + "'");
  const auto cols = split(header, ',');

  auto col_index = [&cols](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    return -1;
  };

  int cost_count = 0;
  while (col_index("cost_" + std::to_string(cost_count + 1)) >= 0) ++cost_count;

  std::vector<std::string> required = {"episode",  "seed",      "variant",
                                       "reward_mean", "reward_std", "td_loss_r",
                                       "td_loss_c", "phi_loss", "grad_norm_theta",
                                       "grad_norm_phi"};
  for (int j = 1; j <= cost_count; ++j) {
    required.push_back("cost_" + std::to_string(j));
    required.push_back("violation_" + std::to_string(j));
  }
  if (cost_count == 0) required.push_back("cost_1");
  std::string missing;
  for (const auto& name : required) {
    if (col_index(name) < 0) missing += (missing.empty() ? "" : ", ") + name;
  }
  if (!missing.empty()) {
    throw std::runtime_error("metrics: '" + path + "' is missing columns: " + missing);
  }

  std::vector<MetricsRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto vals = split(line, ',');
    if (vals.size() != cols.size()) {
      throw std::runtime_error("metrics: malformed row in '" + path + "'");
    }
    MetricsRow row;
    row.episode = std::stoll(vals[col_index("episode")]);
    row.seed = std::stoull(vals[col_index("seed")]);
    row.variant = vals[col_index("variant")];
    row.reward_mean = std::stod(vals[col_index("reward_mean")]);
    row.reward_std = std::stod(vals[col_index("reward_std")]);
    for (int j = 1; j <= cost_count; ++j) {
      row.costs.push_back(std::stod(vals[col_index("cost_" + std::to_string(j))]));
      row.violations.push_back(std::stod(vals[col_index("violation_" + std::to_string(j))]));
    }
    row.td_loss_r = std::stod(vals[col_index("td_loss_r")]);
    row.td_loss_c = std::stod(vals[col_index("td_loss_c")]);
    row.phi_loss = std::stod(vals[col_index("phi_loss")]);
    row.grad_norm_theta = std::stod(vals[col_index("grad_norm_theta")]);
    row.grad_norm_phi = std::stod(vals[col_index("grad_norm_phi")]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void render_line_chart_svg(const std::string& path, const std::string& title,
                           const std::vector<PlotSeries>& series, double bound_line,
                           bool has_bound) {
  constexpr int kW = 640, kH = 400;
  constexpr int kMarginL = 60, kMarginR = 20, kMarginT = 40, kMarginB = 40;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (has_bound) {
    if (first) {
      ymin = ymax = bound_line;
      xmin = 0.0;
      xmax = 1.0;
      first = false;
    }
    ymin = std::min(ymin, bound_line);
    ymax = std::max(ymax, bound_line);
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) {
    return kMarginL + (x - xmin) / (xmax - xmin) * (kW - kMarginL - kMarginR);
  };
  auto py = [&](double y) {
    return kH - kMarginB - (y - ymin) / (ymax - ymin) * (kH - kMarginT - kMarginB);
  };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("plot: cannot open '" + path + "'");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\">"
     << title << "</text>\n";
  os << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\""
     << kW - kMarginL - kMarginR << "\" height=\"" << kH - kMarginT - kMarginB
     << "\" fill=\"none\" stroke=\"#333333\"/>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double yv = ymin + tick * (ymax - ymin) / 4;
    const double xv = xmin + tick * (xmax - xmin) / 4;
    os << "<text x=\"" << kMarginL - 6 << "\" y=\"" << fmt(py(yv) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(yv)
       << "</text>\n";
    os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << kH - kMarginB + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(xv)
       << "</text>\n";
  }

  if (has_bound) {
    os << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(py(bound_line)) << "\" x2=\""
       << kW - kMarginR << "\" y2=\"" << fmt(py(bound_line))
       << "\" stroke=\"#000000\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << kW - kMarginR - 4 << "\" y=\"" << fmt(py(bound_line) - 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">bound "
       << fmt(bound_line) << "</text>\n";
  }

  int color = 0;
  for (const auto& s : series) {
    if (!s.x.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << palette[color % 8]
         << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) os << " ";
        os << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
      }
      os << "\"/>\n";
    }
    os << "<text x=\"" << kMarginL + 8 << "\" y=\"" << kMarginT + 14 + 14 * color
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << palette[color % 8] << "\">"
       << s.label << "</text>\n";
    ++color;
  }
  os << "</svg>\n";
}

std::vector<std::string> plot_metrics(const std::vector<std::string>& csv_paths,
                                      const std::vector<double>& bounds,
                                      const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  struct Loaded {
    std::string label;
    std::vector<MetricsRow> rows;
  };
  std::vector<Loaded> loaded;
  int cost_count = 0;
  for (const auto& path : csv_paths) {
    Loaded l;
    l.rows = read_metrics_csv(path);
    l.label = l.rows.empty() ? std::filesystem::path(path).stem().string() : l.rows[0].variant;
    if (!l.rows.empty()) cost_count = static_cast<int>(l.rows[0].costs.size());
    loaded.push_back(std::move(l));
  }
  if (!bounds.empty() && cost_count != 0 && static_cast<int>(bounds.size()) != cost_count) {
    throw std::runtime_error("plot: bound count does not match cost columns");
  }

  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& title,
                  auto extract, double bound, bool has_bound) {
    std::vector<PlotSeries> series;
    for (const auto& l : loaded) {
      PlotSeries s;
      s.label = l.label;
      for (const auto& row : l.rows) {
        s.x.push_back(static_cast<double>(row.episode));
        s.y.push_back(extract(row));
      }
      series.push_back(std::move(s));
    }
    const std::string path = out_dir + "/" + name;
    render_line_chart_svg(path, title, series, bound, has_bound);
    written.push_back(path);
  };

  emit("reward.svg", "team-average reward",
       [](const MetricsRow& r) { return r.reward_mean; }, 0.0, false);
  for (int j = 0; j < cost_count; ++j) {
    emit("cost_" + std::to_string(j + 1) + ".svg", "cost " + std::to_string(j + 1),
         [j](const MetricsRow& r) { return r.costs[j]; },
         j < static_cast<int>(bounds.size()) ? bounds[j] : 0.0,
         j < static_cast<int>(bounds.size()));
  }
  return written;
}

}  // namespace decom
