#include "sctx/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sctx/errors.hpp"

namespace sctx {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

const char* color(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse_error, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    fail(ErrorKind::parse_error, path.filename().string() + ": expected header '" + header + "'");
  }
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) {
      fail(ErrorKind::parse_error, path.filename().string() + ": malformed row '" + line + "'");
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) fail(ErrorKind::parse_error, path.filename().string() + " has no data rows");
  return rows;
}

double number(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(ErrorKind::parse_error, where + ": bad number '" + s + "'");
  }
  return v;
}

template <typename Series>
Series& series_for(std::vector<Series>& all, const std::string& model) {
  for (auto& s : all) {
    if (s.model == model) return s;
  }
  all.push_back(Series{});
  all.back().model = model;
  return all.back();
}

}  // namespace

ReportInputs read_report_inputs(const std::filesystem::path& dir) {
  ReportInputs in;
  for (const auto& row : read_csv(dir / "results.csv", "sim,model,test_mse,excess_mse")) {
    series_for(in.excess, row[1]).values.push_back(number(row[3], "results.csv"));
  }
  for (const auto& row : read_csv(dir / "curves.csv", "model,epoch,mean_train_mse,mean_val_mse")) {
    auto& s = series_for(in.curves, row[0]);
    const double epoch = number(row[1], "curves.csv");
    if (epoch != static_cast<double>(s.train.size() + 1)) {
      fail(ErrorKind::parse_error, "curves.csv: epochs for '" + row[0] + "' must run 1, 2, ...");
    }
    s.train.push_back(number(row[2], "curves.csv"));
    s.validation.push_back(number(row[3], "curves.csv"));
  }
  return in;
}

std::string render_loss_curves_svg(const std::vector<CurveSeries>& curves) {
  constexpr double width = 760.0, height = 480.0;
  constexpr double left = 90.0, right = 170.0, top = 50.0, bottom = 60.0;
  svg::Document doc(width, height);
  doc.text(width / 2, 28, "Mean training (solid) and validation (dashed) MSE", 16, "middle");

  std::size_t epochs = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& c : curves) {
    epochs = std::max(epochs, c.train.size());
    for (const auto* v : {&c.train, &c.validation}) {
      for (double x : *v) {
        if (x > 0.0) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
    }
  }
  if (!(lo < hi)) {
    lo = std::isfinite(lo) ? lo / 10.0 : 1e-6;
    hi = lo * 100.0;
  }
  const double decade_lo = std::pow(10.0, std::floor(std::log10(lo)));
  const double decade_hi = std::pow(10.0, std::ceil(std::log10(hi)));
  const svg::Scale xs(1.0, std::max<double>(2.0, static_cast<double>(epochs)), left, width - right);
  const svg::Scale ys(decade_lo, decade_hi, height - bottom, top, true);

  const svg::Style axis{"black", "none", 1.0, ""};
  const svg::Style grid{"#dddddd", "none", 0.5, ""};
  doc.line(left, height - bottom, width - right, height - bottom, axis);
  doc.line(left, top, left, height - bottom, axis);
  for (double d = decade_lo; d <= decade_hi * 1.0000001; d *= 10.0) {
    doc.line(left, ys(d), width - right, ys(d), grid);
    char label[32];
    std::snprintf(label, sizeof(label), "1e%d", static_cast<int>(std::lround(std::log10(d))));
    doc.text(left - 8, ys(d) + 4, label, 11, "end");
  }
  for (double t : svg::nice_ticks(1.0, xs.data_hi(), 6)) {
    if (t < 1.0) continue;
    doc.line(xs(t), height - bottom, xs(t), height - bottom + 5, axis);
    char label[32];
    std::snprintf(label, sizeof(label), "%.0f", t);
    doc.text(xs(t), height - bottom + 20, label, 11, "middle");
  }
  doc.text((left + width - right) / 2, height - 15, "epoch", 13, "middle");
  doc.text(25, (top + height - bottom) / 2, "MSE (log scale)", 13, "middle", -90);

  // Downsample long curves to at most ~1000 vertices; every vertex is an exact data point.
  auto points = [&](const std::vector<double>& v) {
    std::vector<std::pair<double, double>> pts;
    const std::size_t stride = std::max<std::size_t>(1, v.size() / 1000);
    for (std::size_t e = 0; e < v.size(); e += stride) {
      if (v[e] > 0.0) pts.emplace_back(xs(static_cast<double>(e + 1)), ys(v[e]));
    }
    if (!v.empty() && (v.size() - 1) % stride != 0 && v.back() > 0.0) {
      pts.emplace_back(xs(static_cast<double>(v.size())), ys(v.back()));
    }
    return pts;
  };
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    doc.begin_group({{"model", c.model}, {"epochs", std::to_string(c.train.size())}});
    doc.polyline(points(c.train), {color(i), "none", 1.5, ""});
    doc.polyline(points(c.validation), {color(i), "none", 1.5, "6,4"});
    doc.end_group();
    const double ly = top + 20.0 + 22.0 * static_cast<double>(i);
    doc.line(width - right + 12, ly, width - right + 40, ly, {color(i), "none", 2.0, ""});
    doc.text(width - right + 46, ly + 4, c.model, 12);
  }
  return doc.str();
}

svg::Scale BoxChartLayout::value_scale(const std::vector<QuantileSummary>& stats) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : stats) {
    lo = std::min(lo, s.min);
    hi = std::max(hi, s.max);
  }
  if (!(lo < hi)) {
    const double pad = std::max(1e-12, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  const double pad = 0.05 * (hi - lo);
  return svg::Scale(lo - pad, hi + pad, height - bottom, top);
}

std::string render_excess_box_svg(const std::vector<ExcessSeries>& excess, const BoxChartLayout& layout) {
  require(!excess.empty(), ErrorKind::invalid_argument, "box plot needs at least one series");
  std::vector<QuantileSummary> stats;
  for (const auto& e : excess) stats.push_back(summarize_values(e.values));
  const svg::Scale ys = layout.value_scale(stats);

  const double w = layout.width, h = layout.height;
  svg::Document doc(w, h);
  doc.text(w / 2, 28, "Excess test MSE across simulations (x = mean)", 16, "middle");
  const svg::Style axis{"black", "none", 1.0, ""};
  const svg::Style grid{"#dddddd", "none", 0.5, ""};
  doc.line(layout.left, h - layout.bottom, w - layout.right, h - layout.bottom, axis);
  doc.line(layout.left, layout.top, layout.left, h - layout.bottom, axis);
  for (double t : svg::nice_ticks(ys.data_lo(), ys.data_hi(), 6)) {
    doc.line(layout.left, ys(t), w - layout.right, ys(t), grid);
    char label[32];
    std::snprintf(label, sizeof(label), "%.3g", t);
    doc.text(layout.left - 8, ys(t) + 4, label, 11, "end");
  }
  doc.text(22, (layout.top + h - layout.bottom) / 2, "excess MSE", 13, "middle", -90);

  const double slot = (w - layout.left - layout.right) / static_cast<double>(excess.size());
  const double box_w = std::min(80.0, slot * 0.5);
  for (std::size_t i = 0; i < excess.size(); ++i) {
    const auto& s = stats[i];
    const double cx = layout.left + slot * (static_cast<double>(i) + 0.5);
    doc.begin_group({{"model", excess[i].model},
                     {"n", std::to_string(s.n)},
                     {"min", format_double(s.min)},
                     {"q1", format_double(s.q1)},
                     {"median", format_double(s.median)},
                     {"q3", format_double(s.q3)},
                     {"max", format_double(s.max)},
                     {"mean", format_double(s.mean)},
                     {"y-min", svg::coord(ys(s.min))},
                     {"y-q1", svg::coord(ys(s.q1))},
                     {"y-median", svg::coord(ys(s.median))},
                     {"y-q3", svg::coord(ys(s.q3))},
                     {"y-max", svg::coord(ys(s.max))},
                     {"y-mean", svg::coord(ys(s.mean))}});
    const svg::Style stroke{color(i), "none", 1.5, ""};
    doc.line(cx, ys(s.max), cx, ys(s.q3), stroke);
    doc.line(cx, ys(s.q1), cx, ys(s.min), stroke);
    doc.line(cx - box_w / 4, ys(s.max), cx + box_w / 4, ys(s.max), stroke);
    doc.line(cx - box_w / 4, ys(s.min), cx + box_w / 4, ys(s.min), stroke);
    doc.rect(cx - box_w / 2, ys(s.q3), box_w, ys(s.q1) - ys(s.q3), {color(i), "#f4f4f4", 1.5, ""});
    doc.line(cx - box_w / 2, ys(s.median), cx + box_w / 2, ys(s.median), {color(i), "none", 2.5, ""});
    const double m = ys(s.mean);
    doc.line(cx - 5, m - 5, cx + 5, m + 5, {"black", "none", 1.5, ""});
    doc.line(cx - 5, m + 5, cx + 5, m - 5, {"black", "none", 1.5, ""});
    doc.end_group();
    doc.text(cx, h - layout.bottom + 20, excess[i].model, 12, "middle");
  }
  return doc.str();
}

void write_report(const std::filesystem::path& dir) {
  const auto in = read_report_inputs(dir);
  const auto write = [&dir](const char* name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::invalid_argument, "cannot write " + (dir / name).string());
    f << content;
  };
  write("loss_curves.svg", render_loss_curves_svg(in.curves));
  write("excess_box.svg", render_excess_box_svg(in.excess));
}

}  // namespace sctx
