#include "steiner/geometry.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <stdexcept>

namespace steiner {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

Point rotate(Point v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

double distance(Point p, Point q) { return std::hypot(p.x - q.x, p.y - q.y); }

std::optional<double> angle_at(Point x, Point a, Point b) {
  const Point u = a - x;
  const Point v = b - x;
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return std::nullopt;
  const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * kDegPerRad;
}

SteinerArc steiner_arc(Point a, Point b, Side side) {
  const double chord = distance(a, b);
  if (chord == 0.0) throw std::invalid_argument("steiner_arc: coincident endpoints");

  // Inscribed angle of 120 degrees: r = |ab| / (2 sin 120) = |ab| / sqrt(3),
  // and the center sits r/2 from the chord on the side opposite the bulge.
  const double radius = chord / std::numbers::sqrt3;
  const Point dir = (1.0 / chord) * (b - a);
  const Point left_normal{-dir.y, dir.x};
  const Point bulge = side == Side::Left ? left_normal : -1.0 * left_normal;
  const Point mid = 0.5 * (a + b);
  const Point center = mid - (0.5 * radius) * bulge;
  return {a, b, side, center, radius};
}

std::vector<Point> arc_partition(const SteinerArc& arc, std::size_t k_star) {
  std::vector<Point> out;
  out.reserve(k_star);
  // Left arcs run clockwise from a to b around the center, right arcs
  // counter-clockwise; the swept central angle is 120 degrees either way.
  const double sweep = (arc.side == Side::Left ? -1.0 : 1.0) * (2.0 * std::numbers::pi / 3.0);
  const Point from_center = arc.a - arc.center;
  for (std::size_t i = 1; i <= k_star; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(k_star + 1);
    out.push_back(arc.center + rotate(from_center, t * sweep));
  }
  return out;
}

Point fermat_point(Point a, Point b, Point c) {
  if (a == b || a == c) return a;
  if (b == c) return b;

  const std::array<Point, 3> v{a, b, c};
  std::array<double, 3> angle{};
  for (int i = 0; i < 3; ++i) {
    angle[i] = *angle_at(v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
    if (angle[i] >= 120.0) return v[i];
  }
  // A straight angle was caught above; here every angle is below 120.
  // Barycentric coordinates of the first isogonic center:
  // |opposite side| / sin(angle + 60 deg).
  double wsum = 0.0;
  Point acc{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    const double opposite = distance(v[(i + 1) % 3], v[(i + 2) % 3]);
    const double w = opposite / std::sin((angle[i] + 60.0) / kDegPerRad);
    acc = acc + w * v[i];
    wsum += w;
  }
  return (1.0 / wsum) * acc;
}

Point fermat_point_iterative(Point a, Point b, Point c, double tolerance,
                             std::size_t max_iterations) {
  const std::array<Point, 3> v{a, b, c};
  for (int i = 0; i < 3; ++i) {
    const auto ang = angle_at(v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
    if (!ang || *ang >= 120.0) return v[i];
  }

  Point x = (1.0 / 3.0) * (a + b + c);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Point num{0.0, 0.0};
    double den = 0.0;
    for (const Point& p : v) {
      const double d = distance(x, p);
      if (d == 0.0) return p;
      num = num + (1.0 / d) * p;
      den += 1.0 / d;
    }
    const Point next = (1.0 / den) * num;
    const double step = distance(next, x);
    x = next;
    if (step < tolerance) break;
  }
  return x;
}

}  // namespace steiner
