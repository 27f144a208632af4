#include "somix/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace somix::plot {

namespace {

constexpr double kCanvas = 640.0;
constexpr double kMargin = 56.0;

struct Bounds {
  double lo_x = -1.0, hi_x = 1.0, lo_y = -1.0, hi_y = 1.0;
};

Bounds bounds_of(const double* a, std::size_t n, const double* b, std::size_t m) {
  Bounds bb;
  bool any = false;
  auto eat = [&](const double* p, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
      const double x = p[2 * i], y = p[2 * i + 1];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!any) {
        bb = Bounds{x, x, y, y};
        any = true;
      } else {
        bb.lo_x = std::min(bb.lo_x, x);
        bb.hi_x = std::max(bb.hi_x, x);
        bb.lo_y = std::min(bb.lo_y, y);
        bb.hi_y = std::max(bb.hi_y, y);
      }
    }
  };
  eat(a, n);
  eat(b, m);
  auto widen = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double pad = span > 0.0 ? 0.05 * span : 1.0;
    lo -= pad;
    hi += pad;
  };
  widen(bb.lo_x, bb.hi_x);
  widen(bb.lo_y, bb.hi_y);
  return bb;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void layer(std::ostringstream& out, const char* id, const char* color, const double* pts,
           std::size_t n, const Bounds& bb) {
  const double inner = kCanvas - 2.0 * kMargin;
  out << "  <g id=\"" << id << "\" fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pts[2 * i], y = pts[2 * i + 1];
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    const double px = kMargin + (x - bb.lo_x) / (bb.hi_x - bb.lo_x) * inner;
    const double py = kMargin + (bb.hi_y - y) / (bb.hi_y - bb.lo_y) * inner;
    out << "    <circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"2\"/>\n";
  }
  out << "  </g>\n";
}

}  // namespace

std::string scatter_svg(const double* samples, std::size_t n_samples, const double* reference,
                        std::size_t n_reference) {
  const Bounds bb = bounds_of(samples, n_samples, reference, n_reference);
  const double inner = kCanvas - 2.0 * kMargin;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kCanvas) << "\" height=\""
      << fmt(kCanvas) << "\" viewBox=\"0 0 " << fmt(kCanvas) << " " << fmt(kCanvas) << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(kCanvas) << "\" height=\"" << fmt(kCanvas)
      << "\" fill=\"white\"/>\n";
  // axes box with min/max labels
  out << "  <g id=\"axes\" stroke=\"#333\" fill=\"none\">\n"
      << "    <rect x=\"" << fmt(kMargin) << "\" y=\"" << fmt(kMargin) << "\" width=\""
      << fmt(inner) << "\" height=\"" << fmt(inner) << "\"/>\n"
      << "  </g>\n"
      << "  <g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n"
      << "    <text x=\"" << fmt(kMargin) << "\" y=\"" << fmt(kCanvas - kMargin + 16.0)
      << "\">" << fmt(bb.lo_x) << "</text>\n"
      << "    <text x=\"" << fmt(kCanvas - kMargin) << "\" y=\""
      << fmt(kCanvas - kMargin + 16.0) << "\" text-anchor=\"end\">" << fmt(bb.hi_x)
      << "</text>\n"
      << "    <text x=\"" << fmt(kMargin - 4.0) << "\" y=\"" << fmt(kCanvas - kMargin)
      << "\" text-anchor=\"end\">" << fmt(bb.lo_y) << "</text>\n"
      << "    <text x=\"" << fmt(kMargin - 4.0) << "\" y=\"" << fmt(kMargin + 4.0)
      << "\" text-anchor=\"end\">" << fmt(bb.hi_y) << "</text>\n"
      << "  </g>\n";
  layer(out, "reference", "#9aa0a6", reference, n_reference, bb);
  layer(out, "samples", "#1a73e8", samples, n_samples, bb);
  out << "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "    <rect x=\"" << fmt(kMargin + 8.0) << "\" y=\"" << fmt(kMargin + 8.0)
      << "\" width=\"10\" height=\"10\" fill=\"#9aa0a6\"/>\n"
      << "    <text x=\"" << fmt(kMargin + 24.0) << "\" y=\"" << fmt(kMargin + 17.0)
      << "\" fill=\"#333\">reference (" << n_reference << ")</text>\n"
      << "    <rect x=\"" << fmt(kMargin + 8.0) << "\" y=\"" << fmt(kMargin + 24.0)
      << "\" width=\"10\" height=\"10\" fill=\"#1a73e8\"/>\n"
      << "    <text x=\"" << fmt(kMargin + 24.0) << "\" y=\"" << fmt(kMargin + 33.0)
      << "\" fill=\"#333\">samples (" << n_samples << ")</text>\n"
      << "  </g>\n</svg>\n";
  return out.str();
}

void emit_scatter_svg(const std::string& path, const double* samples, std::size_t n_samples,
                      const double* reference, std::size_t n_reference) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("plot: cannot open " + path);
  out << scatter_svg(samples, n_samples, reference, n_reference);
  if (!out) throw std::runtime_error("plot: write failed for " + path);
}

}  // namespace somix::plot
