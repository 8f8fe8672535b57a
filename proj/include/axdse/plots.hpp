#pragma once
// Plot series (CSV) and minimal SVG line charts for exploration traces.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "axdse/env.hpp"
#include "axdse/error.hpp"

namespace axdse {

struct RewardWindow {
  std::uint64_t first_step = 0;
  std::uint64_t last_step = 0;
  std::size_t count = 0;
  double mean = 0.0;
};

/// Mean reward over consecutive windows of `window` steps. A trailing partial
/// window is averaged over its actual length.
inline std::vector<RewardWindow> reward_windows(const std::vector<TraceRecord>& trace,
                                                std::size_t window = 100) {
  if (window == 0) throw Error(Errc::InvalidField, "window must be > 0");
  std::vector<RewardWindow> out;
  for (std::size_t start = 0; start < trace.size(); start += window) {
    const std::size_t end = std::min(trace.size(), start + window);
    RewardWindow w;
    w.first_step = trace[start].step;
    w.last_step = trace[end - 1].step;
    w.count = end - start;
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += trace[i].reward;
    w.mean = sum / static_cast<double>(w.count);
    out.push_back(w);
  }
  return out;
}

namespace detail {

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x, y;
};

inline std::string svg_num(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

// One chart, shared axes, one polyline per series.
inline void write_svg(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::vector<Series>& series) {
  const double W = 800, H = 420, L = 70, R = 20, T = 40, B = 50;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymin -= 1.0, ymax += 1.0;
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  if (ymin < 0.0 && ymax > 0.0)
    out << "<line x1=\"" << L << "\" y1=\"" << svg_num(py(0)) << "\" x2=\"" << W - R << "\" y2=\""
        << svg_num(py(0)) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  out << "<text x=\"" << L - 5 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << svg_num(ymax)
      << "</text>\n";
  out << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << svg_num(ymin)
      << "</text>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << svg_num(xmin) << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << svg_num(xmax) << "</text>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  double legend_y = T;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << svg_num(px(s.x[i])) << ',' << svg_num(py(s.y[i])) << (i + 1 < s.x.size() ? " " : "");
    out << "\"/>\n";
    out << "<text x=\"" << W - R - 5 << "\" y=\"" << legend_y + 12 << "\" text-anchor=\"end\" fill=\""
        << s.color << "\">" << s.name << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace detail

struct PlotFiles {
  std::filesystem::path series_csv, series_svg, reward_csv, reward_svg;
};

/// Writes the per-step observation series and the windowed mean reward, each
/// as CSV plus an SVG render, into `dir`.
inline PlotFiles emit_plots(const std::vector<TraceRecord>& trace, const std::filesystem::path& dir,
                            std::size_t window = 100) {
  if (trace.empty()) throw Error(Errc::EmptyTrace, "no steps to plot");
  std::filesystem::create_directories(dir);
  PlotFiles f{dir / "series.csv", dir / "series.svg", dir / "reward.csv", dir / "reward.svg"};

  {
    auto out = detail::open_csv(f.series_csv);
    out << "step,d_power,d_time,d_acc\n";
    for (const auto& r : trace)
      out << r.step << ',' << r.d_power << ',' << r.d_time << ',' << r.d_acc << '\n';
  }
  detail::Series power{"d_power (mW-units)", "#1f77b4", {}, {}};
  detail::Series time{"d_time (ns-units)", "#ff7f0e", {}, {}};
  detail::Series acc{"d_acc", "#2ca02c", {}, {}};
  for (const auto& r : trace) {
    const auto x = static_cast<double>(r.step);
    power.x.push_back(x), power.y.push_back(r.d_power);
    time.x.push_back(x), time.y.push_back(r.d_time);
    acc.x.push_back(x), acc.y.push_back(r.d_acc);
  }
  detail::write_svg(f.series_svg, "Exploration outcomes per step", "step", {power, time, acc});

  const auto windows = reward_windows(trace, window);
  {
    auto out = detail::open_csv(f.reward_csv);
    out << "window,first_step,last_step,count,mean_reward\n";
    for (std::size_t i = 0; i < windows.size(); ++i)
      out << i << ',' << windows[i].first_step << ',' << windows[i].last_step << ','
          << windows[i].count << ',' << windows[i].mean << '\n';
  }
  detail::Series reward{"mean reward / " + std::to_string(window) + " steps", "#d62728", {}, {}};
  for (const auto& w : windows) {
    reward.x.push_back(static_cast<double>(w.last_step));
    reward.y.push_back(w.mean);
  }
  detail::write_svg(f.reward_svg, "Average reward", "step", {reward});
  return f;
}

}  // namespace axdse
