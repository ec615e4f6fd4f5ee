#include "scenario/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace scenario {

namespace {

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) lo -= 0.5, hi += 0.5;
  }
};

std::vector<double> nice_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {2.0, 5.0, 10.0}) {
    if (raw > step) step = m * mag;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

}  // namespace

std::string render_svg(const PlotFrame& frame, const std::vector<Series>& series) {
  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = frame.width - left - right, ph = frame.height - top - bottom;
  auto tx = [&](double x) { return frame.log_x ? std::log10(x) : x; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!frame.log_x || x > 0.0); };

  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (usable(s.x[i], s.y[i])) xr.add(tx(s.x[i])), yr.add(s.y[i]);
    }
  }
  xr.pad();
  yr.pad();
  const double ypad = 0.04 * (yr.hi - yr.lo);
  yr.lo -= ypad;
  yr.hi += ypad;
  auto px = [&](double x) { return left + (tx(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << frame.width << "\" height=\"" << frame.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(frame.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // x ticks: decades on a log axis
  std::vector<double> xticks;
  if (frame.log_x) {
    for (double e = std::ceil(xr.lo - 1e-9); e <= xr.hi + 1e-9; e += 1.0) xticks.push_back(std::pow(10.0, e));
  } else {
    xticks = nice_ticks(xr.lo, xr.hi);
  }
  for (double t : xticks) {
    const double x = px(t);
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
        << fmt(t, "%g") << "</text>\n";
  }
  for (double t : nice_ticks(yr.lo, yr.hi)) {
    const double y = py(t);
    svg << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(y)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">" << fmt(t, "%g")
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(frame.height - 12)
      << "\" text-anchor=\"middle\">" << escape(frame.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(frame.y_label) << "</text>\n";

  svg << "<clipPath id=\"plot\"><rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n";
  for (const auto& s : series) {
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], s.y[i])) continue;
        svg << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"2\" fill=\"" << s.color
            << "\" fill-opacity=\"0.6\"/>\n";
      }
      continue;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) svg << " stroke-dasharray=\"5,3\"";
    svg << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      svg << (first ? "" : " ") << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      first = false;
    }
    svg << "\"/>\n";
  }
  svg << "</g>\n";

  double ly = top + 10;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    const double lx = left + pw + 12;
    if (s.points) {
      svg << "<circle cx=\"" << fmt(lx + 10) << "\" cy=\"" << fmt(ly) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    } else {
      svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 20) << "\" y2=\""
          << fmt(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    svg << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(s.label) << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void add_bound_pair(std::vector<Series>& out, const std::vector<RiskInterval>& table, const std::string& tag,
                    const char* color) {
  Series lo{tag + " lower", color, {}, {}, false, true};
  Series up{tag + " upper", color, {}, {}, false, false};
  for (const auto& r : table) {
    lo.x.push_back(static_cast<double>(r.query.complexity));
    lo.y.push_back(r.lower);
    up.x.push_back(static_cast<double>(r.query.complexity));
    up.y.push_back(r.upper);
  }
  out.push_back(std::move(lo));
  out.push_back(std::move(up));
}

}  // namespace

std::string plot_bounds(const std::vector<std::pair<double, std::vector<RiskInterval>>>& tables) {
  std::vector<Series> series;
  std::size_t c = 0;
  for (const auto& [beta, table] : tables) {
    add_bound_pair(series, table, beta > 0.0 ? "beta=" + fmt(beta, "%g") : std::string("eps"), palette[c++ % 6]);
  }
  return render_svg({"Risk bounds", "complexity k", "risk", false}, series);
}

std::string plot_cost_risk(const std::vector<CostRiskRow>& rows) {
  Series cost{"cost", palette[0], {}, {}}, lo{"eps lower", palette[1], {}, {}, false, true}, up{"eps upper", palette[1], {}, {}};
  for (const auto& r : rows) {
    if (r.error) continue;
    cost.x.push_back(r.rho);
    cost.y.push_back(r.cost);
    lo.x.push_back(r.rho);
    lo.y.push_back(r.eps_lower);
    up.x.push_back(r.rho);
    up.y.push_back(r.eps_upper);
  }
  return render_svg({"Cost and risk against rho", "rho", "value", true}, {cost, lo, up});
}

std::string plot_scatter(const ValidationReport& report, std::int64_t n, double beta) {
  std::vector<Series> series;
  std::int64_t kmax = 0;
  Series pts{"trials", palette[0], {}, {}, true};
  for (const auto& t : report.trials) {
    pts.x.push_back(static_cast<double>(t.complexity));
    pts.y.push_back(t.empirical_risk);
    kmax = std::max(kmax, t.complexity);
  }
  const auto table = epsilon_table(n, beta);
  const std::int64_t shown = std::min<std::int64_t>(n, std::max<std::int64_t>(2 * kmax, 10));
  add_bound_pair(series, std::vector<RiskInterval>(table.begin(), table.begin() + shown + 1), "bound",
                 palette[1]);
  series.push_back(std::move(pts));
  return render_svg({"Empirical risk against complexity", "s*", "risk", false}, series);
}

std::string plot_tube(const Dataset& data, const SvrModel& model) {
  if (data.dimension() != 1) throw std::invalid_argument("tube plot needs one-dimensional inputs");
  Series pts{"data", "#7f7f7f", {}, {}, true};
  for (Index i = 0; i < data.size(); ++i) {
    pts.x.push_back(data.inputs(i, 0));
    pts.y.push_back(data.has_outputs() ? data.outputs[i] : 0.0);
  }
  const double lo = data.inputs.col(0).minCoeff(), hi = data.inputs.col(0).maxCoeff();
  const Index steps = 400;
  const MatX grid = VecX::LinSpaced(steps, lo, hi);
  const VecX c = svr_centers(model, grid);
  Series center{"center", palette[0], {}, {}}, upper{"tube", palette[1], {}, {}, false, true}, lower{"", palette[1], {}, {}, false, true};
  for (Index i = 0; i < steps; ++i) {
    center.x.push_back(grid(i, 0));
    center.y.push_back(c[i]);
    upper.x.push_back(grid(i, 0));
    upper.y.push_back(c[i] + model.tube);
    lower.x.push_back(grid(i, 0));
    lower.y.push_back(c[i] - model.tube);
  }
  return render_svg({"Regression tube", "m", "y", false}, {pts, center, upper, lower});
}

}  // namespace scenario
