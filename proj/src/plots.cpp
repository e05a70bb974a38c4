/*
 Copyright 2026 The kmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Minimal SVG line charts, no external dependencies.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "kmpc/harness.hpp"

namespace kmpc {

namespace {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // optional band
  std::vector<double> hi;
};

struct Chart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

const char* color_for(const std::string& label) {
  if (label.rfind("koopman", 0) == 0) return "#d62728";
  if (label.rfind("rff", 0) == 0) return "#1f77b4";
  if (label.rfind("nominal", 0) == 0) return "#7f7f7f";
  if (label.rfind("oracle", 0) == 0) return "#2ca02c";
  return "#9467bd";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void render(const Chart& chart, std::ostream& out) {
  constexpr double width = 720.0, height = 420.0;
  constexpr double left = 70.0, right = 150.0, top = 40.0, bottom = 50.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double lo = s.lo.empty() ? s.y[i] : s.lo[i];
      const double hi = s.hi.empty() ? s.y[i] : s.hi[i];
      if (std::isfinite(lo)) ymin = std::min(ymin, lo);
      if (std::isfinite(hi)) ymax = std::max(ymax, hi);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    y = std::clamp(y, ymin, ymax);
    return top + (ymax - y) / (ymax - ymin) * ph;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << chart.title << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    out << "<text x=\"" << fmt_px(px(xv)) << "\" y=\"" << fmt_px(top + ph + 18)
        << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    out << "<text x=\"" << fmt_px(left - 6) << "\" y=\"" << fmt_px(py(yv) + 4)
        << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    out << "<line x1=\"" << fmt_px(left) << "\" x2=\"" << fmt_px(left + pw) << "\" y1=\""
        << fmt_px(py(yv)) << "\" y2=\"" << fmt_px(py(yv)) << "\" stroke=\"#eeeeee\"/>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << chart.xlabel << "</text>\n";
  out << "<text transform=\"translate(16," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << chart.ylabel << "</text>\n";

  int legend_row = 0;
  for (const Series& s : chart.series) {
    const char* color = color_for(s.label);
    if (!s.lo.empty() && !s.hi.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << fmt_px(px(s.x[i])) << ',' << fmt_px(py(s.hi[i])) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        out << fmt_px(px(s.x[i])) << ',' << fmt_px(py(s.lo[i])) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << fmt_px(px(s.x[i])) << ',' << fmt_px(py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = top + 14 + 18 * legend_row++;
    out << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 34 << "\" y1=\"" << ly - 4
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<std::string> names_in(const std::vector<RunLog>& logs) {
  std::vector<std::string> names;
  for (const RunLog& log : logs) {
    if (std::find(names.begin(), names.end(), log.controller) == names.end()) {
      names.push_back(log.controller);
    }
  }
  return names;
}

std::vector<double> times(std::size_t n, double dt) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

Band band_for(const std::vector<RunLog>& logs, const std::string& name,
              std::vector<double> (*metric)(const RunLog&)) {
  std::vector<std::vector<double>> series;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const RunLog& log : logs) {
    if (log.controller != name || log.failed || log.steps.empty()) continue;
    series.push_back(metric(log));
    len = std::min(len, series.back().size());
  }
  for (auto& s : series) s.resize(len);
  return aggregate(series);
}

std::filesystem::path write_chart(const Chart& chart, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  render(chart, out);
  return path;
}

}  // namespace

std::vector<std::filesystem::path> write_plots(const std::vector<RunLog>& logs, double dt,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> paths;
  const auto names = names_in(logs);

  Chart err{"Mean stabilization error", "time [s]", "||x_t||^2", {}};
  Chart pred{"One-step residual prediction error", "time [s]", "||w_t - w_hat_t||", {}};
  for (const std::string& name : names) {
    const Band b = band_for(logs, name, &stabilization_error);
    if (!b.mean.empty()) err.series.push_back({name, times(b.mean.size(), dt), b.mean, b.min, b.max});
    if (name == "oracle") continue;
    const Band p = band_for(logs, name, &prediction_error);
    if (!p.mean.empty()) pred.series.push_back({name, times(p.mean.size(), dt), p.mean, {}, {}});
  }
  paths.push_back(write_chart(err, out_dir / "stabilization_error.svg"));

  Chart cart{"Sample trajectory (run 0): cart position", "time [s]", "x [m]", {}};
  Chart pole{"Sample trajectory (run 0): pole angle", "time [s]", "theta [rad]", {}};
  for (const RunLog& log : logs) {
    if (log.run != 0 || log.steps.empty()) continue;
    std::vector<double> xs, th;
    for (const StepRecord& s : log.steps) {
      xs.push_back(s.x[0]);
      th.push_back(s.x[2]);
    }
    cart.series.push_back({log.controller, times(xs.size(), dt), xs, {}, {}});
    pole.series.push_back({log.controller, times(th.size(), dt), th, {}, {}});
  }
  paths.push_back(write_chart(cart, out_dir / "trajectory_cart.svg"));
  paths.push_back(write_chart(pole, out_dir / "trajectory_pole.svg"));
  paths.push_back(write_chart(pred, out_dir / "prediction_error.svg"));
  return paths;
}

}  // namespace kmpc
