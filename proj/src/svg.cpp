#include "sctx/svg.hpp"

#include <cmath>
#include <cstdio>

#include "sctx/errors.hpp"

namespace sctx::svg {

namespace {

std::string style_attrs(const Style& s) {
  std::string out = " stroke=\"" + escape(s.stroke) + "\" fill=\"" + escape(s.fill) + "\" stroke-width=\"" +
                    coord(s.stroke_width) + "\"";
  if (!s.dash.empty()) out += " stroke-dasharray=\"" + escape(s.dash) + "\"";
  return out;
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string coord(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::line(double x1, double y1, double x2, double y2, const Style& style) {
  body_ += "<line x1=\"" + coord(x1) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(x2) + "\" y2=\"" + coord(y2) +
           "\"" + style_attrs(style) + "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& points, const Style& style) {
  body_ += "<polyline points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ += ' ';
    body_ += coord(points[i].first) + "," + coord(points[i].second);
  }
  body_ += "\"" + style_attrs(style) + "/>\n";
}

void Document::rect(double x, double y, double w, double h, const Style& style) {
  body_ += "<rect x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" width=\"" + coord(w) + "\" height=\"" + coord(h) +
           "\"" + style_attrs(style) + "/>\n";
}

void Document::circle(double cx, double cy, double r, const Style& style) {
  body_ += "<circle cx=\"" + coord(cx) + "\" cy=\"" + coord(cy) + "\" r=\"" + coord(r) + "\"" + style_attrs(style) +
           "/>\n";
}

void Document::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                    double rotate) {
  body_ += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-size=\"" + coord(size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + escape(anchor) + "\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + coord(rotate) + " " + coord(x) + " " + coord(y) + ")\"";
  body_ += ">" + escape(content) + "</text>\n";
}

void Document::begin_group(const std::vector<std::pair<std::string, std::string>>& attributes) {
  body_ += "<g";
  for (const auto& [k, v] : attributes) body_ += " data-" + k + "=\"" + escape(v) + "\"";
  body_ += ">\n";
  ++open_groups_;
}

void Document::end_group() {
  require(open_groups_ > 0, ErrorKind::invalid_argument, "svg: end_group without begin_group");
  body_ += "</g>\n";
  --open_groups_;
}

std::string Document::str() const {
  require(open_groups_ == 0, ErrorKind::invalid_argument, "svg: unclosed group");
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         coord(width_) + "\" height=\"" + coord(height_) + "\" viewBox=\"0 0 " + coord(width_) + " " +
         coord(height_) + "\">\n<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ +
         "</svg>\n";
}

Scale::Scale(double data_lo, double data_hi, double pixel_lo, double pixel_hi, bool log)
    : data_lo_(data_lo), data_hi_(data_hi), pixel_lo_(pixel_lo), pixel_hi_(pixel_hi), log_(log) {
  require(std::isfinite(data_lo) && std::isfinite(data_hi) && data_lo < data_hi, ErrorKind::invalid_range,
          "scale needs finite lo < hi");
  require(!log || data_lo > 0.0, ErrorKind::invalid_range, "log scale needs a positive range");
}

double Scale::operator()(double v) const {
  double t = 0.0;
  if (log_) {
    t = (std::log10(v) - std::log10(data_lo_)) / (std::log10(data_hi_) - std::log10(data_lo_));
  } else {
    t = (v - data_lo_) / (data_hi_ - data_lo_);
  }
  return pixel_lo_ + t * (pixel_hi_ - pixel_lo_);
}

std::vector<double> nice_ticks(double lo, double hi, int count) {
  std::vector<double> ticks;
  if (!(hi > lo) || count < 2) return {lo};
  const double raw = (hi - lo) / (count - 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

}  // namespace sctx::svg
