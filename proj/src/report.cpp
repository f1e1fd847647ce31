#include "fsgauge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fsgauge/errors.hpp"

namespace fsgauge {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 56.0;

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double sy(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Frame frame_for(const ScatterSeries& s) {
  if (s.x.size() != s.y.size()) throw_invalid("scatter series x and y differ in length");
  Frame f{0.0, 1.0, 0.0, 1.0};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
      xs.push_back(s.x[i]);
      ys.push_back(s.y[i]);
    }
  }
  if (!xs.empty()) {
    auto [xa, xb] = std::minmax_element(xs.begin(), xs.end());
    auto [ya, yb] = std::minmax_element(ys.begin(), ys.end());
    f = {*xa, *xb, *ya, *yb};
  }
  if (f.x1 <= f.x0) { f.x0 -= 0.5; f.x1 += 0.5; }
  if (f.y1 <= f.y0) { f.y0 -= 0.5; f.y1 += 0.5; }
  return f;
}

std::string open_svg(const Frame& f, const std::string& x_label, const std::string& y_label, const std::string& title) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double l = kMargin, r = kWidth - kMargin, t = kMargin, b = kHeight - kMargin;
  o << "<path d=\"M" << px(l) << ' ' << px(t) << " V" << px(b) << " H" << px(r) << "\" stroke=\"black\" fill=\"none\"/>\n";
  o << "<text x=\"" << px(l) << "\" y=\"" << px(b + 16) << "\" font-size=\"11\" text-anchor=\"middle\">" << num(f.x0) << "</text>\n";
  o << "<text x=\"" << px(r) << "\" y=\"" << px(b + 16) << "\" font-size=\"11\" text-anchor=\"middle\">" << num(f.x1) << "</text>\n";
  o << "<text x=\"" << px(l - 6) << "\" y=\"" << px(b) << "\" font-size=\"11\" text-anchor=\"end\">" << num(f.y0) << "</text>\n";
  o << "<text x=\"" << px(l - 6) << "\" y=\"" << px(t + 4) << "\" font-size=\"11\" text-anchor=\"end\">" << num(f.y1) << "</text>\n";
  o << "<text x=\"" << px(kWidth / 2) << "\" y=\"" << px(kHeight - 12) << "\" font-size=\"13\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << px(kHeight / 2) << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << px(kHeight / 2) << ")\">" << escape(y_label) << "</text>\n";
  if (!title.empty()) {
    o << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  }
  return o.str();
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw_data("write to '" + path.string() + "' failed");
}

std::string scatter_svg(const ScatterSeries& series, const std::string& x_label, const std::string& y_label,
                        const std::string& title) {
  const Frame f = frame_for(series);
  std::ostringstream o;
  o << open_svg(f, x_label, y_label, title);
  for (std::size_t i = 0; i < series.x.size(); ++i) {
    if (!std::isfinite(series.x[i]) || !std::isfinite(series.y[i])) continue;
    o << "<circle cx=\"" << px(f.sx(series.x[i])) << "\" cy=\"" << px(f.sy(series.y[i]))
      << "\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string line_svg(const ScatterSeries& series, const std::string& x_label, const std::string& y_label,
                     const std::string& title) {
  const Frame f = frame_for(series);
  std::ostringstream o;
  o << open_svg(f, x_label, y_label, title);
  o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < series.x.size(); ++i) {
    if (!std::isfinite(series.x[i]) || !std::isfinite(series.y[i])) continue;
    o << (first ? "" : " ") << px(f.sx(series.x[i])) << ',' << px(f.sy(series.y[i]));
    first = false;
  }
  o << "\"/>\n</svg>\n";
  return o.str();
}

}  // namespace fsgauge
