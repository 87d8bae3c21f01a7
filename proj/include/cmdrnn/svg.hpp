#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cmdrnn {

// Minimal SVG emitter for the harness charts: primitives only, deterministic
// formatting, no external plotting dependency.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333",
            double stroke_width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill);
  void circle(double cx, double cy, double r, const std::string& fill);
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double stroke_width = 1.5);
  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;
  void save(const std::string& path) const;

 private:
  double width_, height_;
  std::vector<std::string> body_;
};

}  // namespace cmdrnn
