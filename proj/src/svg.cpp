#include "steiner/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace steiner {

std::string render_svg(const PointSet& points, const Tree& tree) {
  if (points.empty()) throw std::invalid_argument("render_svg: no points");
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const Point& p : points.points) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  double w = hi_x - lo_x, h = hi_y - lo_y;
  const double extent = std::max({w, h, 1e-9});
  if (w <= 0.0) w = extent;
  if (h <= 0.0) h = extent;
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  const double vx = cx - 0.55 * w, vy = -cy - 0.55 * h;
  const double r = 0.012 * extent;
  const double stroke = 0.004 * extent;

  std::string out;
  char buf[256];
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.10g %.10g %.10g %.10g\" "
                "width=\"600\" height=\"%.0f\">\n",
                vx, vy, 1.1 * w, 1.1 * h, std::clamp(600.0 * h / w, 60.0, 6000.0));
  out += buf;
  std::snprintf(buf, sizeof buf, "<g stroke=\"#336\" stroke-width=\"%.10g\">\n", stroke);
  out += buf;
  for (const Edge& e : tree.edges) {
    if (e.u >= points.size() || e.v >= points.size()) throw std::out_of_range("render_svg: edge index");
    const Point a = points[e.u], b = points[e.v];
    std::snprintf(buf, sizeof buf, "<line x1=\"%.10g\" y1=\"%.10g\" x2=\"%.10g\" y2=\"%.10g\"/>\n", a.x, -a.y,
                  b.x, -b.y);
    out += buf;
  }
  out += "</g>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point p = points[i];
    if (i < points.terminal_count)
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.10g\" cy=\"%.10g\" r=\"%.10g\" fill=\"#000\"/>\n", p.x,
                    -p.y, r);
    else
      std::snprintf(buf, sizeof buf,
                    "<circle cx=\"%.10g\" cy=\"%.10g\" r=\"%.10g\" fill=\"none\" stroke=\"#c33\" "
                    "stroke-width=\"%.10g\"/>\n",
                    p.x, -p.y, r, stroke);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace steiner
