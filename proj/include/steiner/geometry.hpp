#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace steiner {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

double distance(Point p, Point q);

/// Angle axb at vertex x, in degrees within [0, 180]. Empty when x coincides
/// with a or b.
std::optional<double> angle_at(Point x, Point a, Point b);

/// Which side of the directed chord a->b the arc bulges toward.
enum class Side { Left, Right };

/// One of the two circular arcs from which the chord ab is seen at 120 degrees.
struct SteinerArc {
  Point a;
  Point b;
  Side side = Side::Left;
  Point center;
  double radius = 0.0;
};

/// Throws std::invalid_argument when a == b.
SteinerArc steiner_arc(Point a, Point b, Side side);

/// k_star interior points splitting the arc into k_star + 1 pieces of equal
/// central angle, ordered from a to b. Endpoints are not included.
std::vector<Point> arc_partition(const SteinerArc& arc, std::size_t k_star);

/// Point minimizing |xa| + |xb| + |xc|. Returns the vertex when the triangle
/// has an angle of at least 120 degrees (or when two inputs coincide),
/// otherwise the isogonic center from its barycentric closed form.
Point fermat_point(Point a, Point b, Point c);

/// Same minimizer computed by damped Weiszfeld iteration until the step is
/// below `tolerance`. Slower than fermat_point; kept as an independent route.
Point fermat_point_iterative(Point a, Point b, Point c, double tolerance = 1e-12,
                             std::size_t max_iterations = 1'000'000);

}  // namespace steiner
