#include "cmdrnn/svg.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmdrnn/tensor.hpp"

namespace cmdrnn {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                     double stroke_width) {
  body_.push_back("<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
                  num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"/>");
}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill) {
  body_.push_back("<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
                  num(h) + "\" fill=\"" + fill + "\"/>");
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill) {
  body_.push_back("<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
                  fill + "\"/>");
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                         double stroke_width) {
  std::string p;
  for (const auto& [x, y] : pts) {
    if (!p.empty()) p += ' ';
    p += num(x) + "," + num(y);
  }
  body_.push_back("<polyline points=\"" + p + "\" fill=\"none\" stroke=\"" + stroke +
                  "\" stroke-width=\"" + num(stroke_width) + "\"/>");
}

void SvgCanvas::text(double x, double y, const std::string& s, double size, const std::string& anchor) {
  body_.push_back("<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                  "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>");
}

std::string SvgCanvas::str() const {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
     << num(height_) << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\"" << num(height_)
     << "\" fill=\"white\"/>\n";
  for (const auto& e : body_) os << e << '\n';
  os << "</svg>\n";
  return os.str();
}

void SvgCanvas::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write SVG '" + path + "'");
  out << str();
  if (!out) throw IoError("write failed for SVG '" + path + "'");
}

}  // namespace cmdrnn
