#pragma once

// Loss-curve and excess-MSE box-plot figures rebuilt from an experiment's
// results.csv and curves.csv.

#include <filesystem>
#include <string>
#include <vector>

#include "sctx/experiment.hpp"
#include "sctx/svg.hpp"

namespace sctx {

struct CurveSeries {
  std::string model;
  std::vector<double> train;       // epoch 1..n
  std::vector<double> validation;
};

struct ExcessSeries {
  std::string model;
  std::vector<double> values;  // one per simulation
};

struct ReportInputs {
  std::vector<ExcessSeries> excess;  // first-appearance order
  std::vector<CurveSeries> curves;
};

/// Throws parse_error on missing, empty or malformed files.
ReportInputs read_report_inputs(const std::filesystem::path& dir);

/// Plot geometry of the box chart; exposed so callers can locate elements.
struct BoxChartLayout {
  double width = 720.0;
  double height = 480.0;
  double left = 90.0;
  double right = 30.0;
  double top = 50.0;
  double bottom = 60.0;

  /// Value axis shared by every box (padded range of all values).
  svg::Scale value_scale(const std::vector<QuantileSummary>& stats) const;
};

std::string render_loss_curves_svg(const std::vector<CurveSeries>& curves);
/// Whiskers span min..max, the box q1..q3, a line marks the median and an
/// x marks the mean. Each box is wrapped in a <g> whose data-* attributes
/// carry the summary values and their pixel positions.
std::string render_excess_box_svg(const std::vector<ExcessSeries>& excess,
                                  const BoxChartLayout& layout = BoxChartLayout{});

/// Writes loss_curves.svg and excess_box.svg into dir.
void write_report(const std::filesystem::path& dir);

}  // namespace sctx
