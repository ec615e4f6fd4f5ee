#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scenario/experiments.hpp"
#include "scenario/risk_bounds.hpp"
#include "scenario/sv_models.hpp"

namespace scenario {

struct Series {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // markers instead of a polyline
  bool dashed = false;
};

struct PlotFrame {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  double width = 640;
  double height = 420;
};

/// Single-panel SVG document. Non-finite samples are dropped.
std::string render_svg(const PlotFrame& frame, const std::vector<Series>& series);

/// Lower and upper risk curves against k, one pair per table.
std::string plot_bounds(const std::vector<std::pair<double, std::vector<RiskInterval>>>& tables);
/// Cost and risk interval against rho on a log axis.
std::string plot_cost_risk(const std::vector<CostRiskRow>& rows);
/// Empirical risk per trial against s*, with the bound curves for (n, beta).
std::string plot_scatter(const ValidationReport& report, std::int64_t n, double beta);
/// Training points with the fitted center and tube edges.
std::string plot_tube(const Dataset& data, const SvrModel& model);

}  // namespace scenario
