#pragma once

// Minimal SVG writer: just the primitives the report figures use.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sctx::svg {

struct Style {
  std::string stroke = "none";
  std::string fill = "none";
  double stroke_width = 1.0;
  std::string dash;  // stroke-dasharray, empty for solid
};

class Document {
 public:
  Document(double width, double height);

  void line(double x1, double y1, double x2, double y2, const Style& style);
  void polyline(const std::vector<std::pair<double, double>>& points, const Style& style);
  void rect(double x, double y, double w, double h, const Style& style);
  void circle(double cx, double cy, double r, const Style& style);
  void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "start",
            double rotate = 0.0);
  /// Opens a <g> carrying the given data-* attributes; close with end_group().
  void begin_group(const std::vector<std::pair<std::string, std::string>>& attributes);
  void end_group();

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
  int open_groups_ = 0;
};

std::string escape(std::string_view text);
/// Fixed 3-decimal coordinate formatting.
std::string coord(double v);

/// Maps a data interval onto a pixel interval, optionally in log10 space.
class Scale {
 public:
  Scale(double data_lo, double data_hi, double pixel_lo, double pixel_hi, bool log = false);
  double operator()(double v) const;
  bool is_log() const noexcept { return log_; }
  double data_lo() const noexcept { return data_lo_; }
  double data_hi() const noexcept { return data_hi_; }

 private:
  double data_lo_, data_hi_, pixel_lo_, pixel_hi_;
  bool log_;
};

/// Roughly `count` round tick values covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int count = 6);

}  // namespace sctx::svg
