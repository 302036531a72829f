#pragma once

// Learning-curve SVG: window-100 trailing moving median of macro steps per
// episode, one panel per target count, blue for intermediate rewards and
// red for terminal-only rewards, with a dashed line at the macro cap.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "simenv.hpp"
#include "trainer.hpp"

namespace topomacro {

struct PlotSeries {
  std::string label;
  int n_targets = 1;
  RewardScheme scheme = RewardScheme::Intermediate;
  int macro_cap = 250;
  std::vector<int> macro_steps;  // one per episode
};

/// Reads the macro_steps column of a metrics CSV.
inline std::vector<int> read_macro_steps(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw Error(ErrorKind::ParseError, "metrics csv: unexpected header '" + line + "'");
  std::vector<int> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    for (int col = 0; col < 3; ++col)
      if (!std::getline(ls, field, ','))
        throw Error(ErrorKind::ParseError, "metrics csv: short row '" + line + "'");
    try {
      out.push_back(std::stoi(field));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "metrics csv: bad macro_steps '" + field + "'");
    }
  }
  return out;
}

inline std::vector<double> moving_median(const std::vector<int>& v, std::size_t window = 100) {
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    out.push_back(median(std::vector<int>(v.begin() + static_cast<std::ptrdiff_t>(lo),
                                          v.begin() + static_cast<std::ptrdiff_t>(i) + 1)));
  }
  return out;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_learning_curves_svg(std::ostream& os, const std::vector<PlotSeries>& series,
                                      std::size_t window = 100) {
  std::map<int, std::vector<const PlotSeries*>> panels;
  for (const auto& s : series) panels[s.n_targets].push_back(&s);

  constexpr double panel_w = 320, panel_h = 240, margin_l = 50, margin_t = 30, margin_b = 40, gap = 20;
  const double width = margin_l + static_cast<double>(std::max<std::size_t>(panels.size(), 1)) * (panel_w + gap);
  const double height = margin_t + panel_h + margin_b + 20.0 * static_cast<double>(series.size());
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  double x0 = margin_l;
  int legend_row = 0;
  for (const auto& [targets, members] : panels) {
    int cap = 0;
    std::size_t episodes = 1;
    for (const auto* s : members) {
      cap = std::max(cap, s->macro_cap);
      episodes = std::max(episodes, s->macro_steps.size());
    }
    const double y_max = cap * 1.05;
    auto px = [&](double ep) { return x0 + ep / static_cast<double>(episodes) * panel_w; };
    auto py = [&](double v) { return margin_t + panel_h - std::min(v, y_max) / y_max * panel_h; };

    os << "<g class=\"panel\" data-targets=\"" << targets << "\">\n";
    os << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"18\" text-anchor=\"middle\">" << targets
       << (targets == 1 ? " target" : " targets") << "</text>\n";
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(margin_t) << "\" width=\"" << num(panel_w) << "\" height=\""
       << num(panel_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<line class=\"cap\" x1=\"" << num(x0) << "\" y1=\"" << num(py(cap)) << "\" x2=\"" << num(x0 + panel_w)
       << "\" y2=\"" << num(py(cap)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << num(x0 + 4) << "\" y=\"" << num(py(cap) - 3) << "\" fill=\"gray\">cap " << cap
       << "</text>\n";
    os << "<text x=\"" << num(x0 + panel_w / 2) << "\" y=\"" << num(margin_t + panel_h + 28)
       << "\" text-anchor=\"middle\">episode</text>\n";
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(margin_t + panel_h) << "\" text-anchor=\"end\">0</text>\n";
    os << "<text x=\"" << num(x0 + panel_w) << "\" y=\"" << num(margin_t + panel_h + 14) << "\" text-anchor=\"end\">"
       << episodes << "</text>\n";
    for (const auto* s : members) {
      const auto smooth = moving_median(s->macro_steps, window);
      const char* color = s->scheme == RewardScheme::Intermediate ? "#1f77b4" : "#d62728";
      os << "<polyline class=\"series\" data-label=\"" << svg_escape(s->label) << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < smooth.size(); ++i)
        os << (i ? " " : "") << num(px(static_cast<double>(i))) << ',' << num(py(smooth[i]));
      os << "\"/>\n";
      const double ly = margin_t + panel_h + margin_b + 20.0 * legend_row++;
      os << "<line x1=\"" << num(margin_l) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(margin_l + 20) << "\" y2=\""
         << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text class=\"legend\" x=\"" << num(margin_l + 26) << "\" y=\"" << num(ly + 4) << "\">"
         << svg_escape(s->label) << "</text>\n";
    }
    os << "</g>\n";
    x0 += panel_w + gap;
  }
  os << "<text x=\"12\" y=\"" << num(margin_t + panel_h / 2) << "\" transform=\"rotate(-90 12 "
     << num(margin_t + panel_h / 2) << ")\" text-anchor=\"middle\">macro steps per episode (median of " << window
     << ")</text>\n";
  os << "</svg>\n";
}

}  // namespace topomacro
