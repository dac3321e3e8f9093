#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "steiner/geometry.hpp"

namespace steiner {

/// Terminals occupy indices [0, terminal_count); anything after them is an
/// added Steiner point.
struct PointSet {
  std::vector<Point> points;
  std::size_t terminal_count = 0;

  PointSet() = default;
  explicit PointSet(std::vector<Point> terminals)
      : points(std::move(terminals)), terminal_count(points.size()) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }
  std::span<const Point> terminals() const { return {points.data(), terminal_count}; }
  std::span<const Point> steiner_points() const {
    return {points.data() + terminal_count, points.size() - terminal_count};
  }
};

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Tree {
  std::vector<Edge> edges;
  double length = 0.0;
};

/// Prim's algorithm on the complete Euclidean graph. Ties on distance are
/// broken toward the lowest index pair. Edges come out as (min, max) in the
/// order Prim attaches them. Throws std::invalid_argument on an empty set.
Tree mst(std::span<const Point> points);
inline Tree mst(const PointSet& ps) { return mst(std::span<const Point>(ps.points)); }

/// MST length only; avoids materializing the edge list.
double mst_length(std::span<const Point> points);

/// Sum of Euclidean edge lengths. Throws std::out_of_range on a dangling index.
double tree_length(const Tree& tree, std::span<const Point> points);
inline double tree_length(const Tree& tree, const PointSet& ps) {
  return tree_length(tree, std::span<const Point>(ps.points));
}

/// Exhaustive minimum over all n^(n-2) labeled spanning trees (Pruefer
/// enumeration). Test oracle; refuses more than 8 points.
Tree brute_force_mst(std::span<const Point> points);

/// True when the edge list is a spanning tree over `point_count` vertices.
bool is_spanning_tree(const Tree& tree, std::size_t point_count);

}  // namespace steiner
