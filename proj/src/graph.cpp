#include "steiner/graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace steiner {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

Edge ordered(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Prim over the dense graph; fills `parent` so that vertex order[i] attaches
// to parent[order[i]].
template <typename OnEdge>
double prim(std::span<const Point> pts, OnEdge&& on_edge) {
  const std::size_t n = pts.size();
  if (n == 0) throw std::invalid_argument("mst: empty point set");
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, kNone);
  std::vector<char> in_tree(n, 0);
  double total = 0.0;

  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t added = 1; added < n; ++added) {
    const Point c = pts[current];
    std::size_t best = kNone;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = distance(c, pts[v]);
      if (d < key[v] || (d == key[v] && current < parent[v])) {
        key[v] = d;
        parent[v] = current;
      }
      if (best == kNone || key[v] < key[best]) best = v;
    }
    in_tree[best] = 1;
    total += key[best];
    on_edge(parent[best], best);
    current = best;
  }
  return total;
}

}  // namespace

Tree mst(std::span<const Point> points) {
  Tree t;
  t.edges.reserve(points.empty() ? 0 : points.size() - 1);
  prim(points, [&](std::size_t p, std::size_t v) { t.edges.push_back(ordered(p, v)); });
  // Re-sum in edge order so the cached length is exactly tree_length().
  t.length = tree_length(t, points);
  return t;
}

double mst_length(std::span<const Point> points) {
  return prim(points, [](std::size_t, std::size_t) {});
}

double tree_length(const Tree& tree, std::span<const Point> points) {
  double total = 0.0;
  for (const Edge& e : tree.edges) {
    if (e.u >= points.size() || e.v >= points.size())
      throw std::out_of_range("tree_length: edge references a missing point");
    total += distance(points[e.u], points[e.v]);
  }
  return total;
}

bool is_spanning_tree(const Tree& tree, std::size_t point_count) {
  if (point_count == 0) return tree.edges.empty();
  if (tree.edges.size() != point_count - 1) return false;
  std::vector<std::size_t> root(point_count);
  std::iota(root.begin(), root.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const Edge& e : tree.edges) {
    if (e.u >= point_count || e.v >= point_count) return false;
    const std::size_t a = find(e.u);
    const std::size_t b = find(e.v);
    if (a == b) return false;
    root[a] = b;
  }
  return true;
}

Tree brute_force_mst(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("brute_force_mst: empty point set");
  if (n > 8) throw std::invalid_argument("brute_force_mst: refusing more than 8 points");
  if (n == 1) return {};
  if (n == 2) return {{Edge{0, 1}}, distance(points[0], points[1])};

  Tree best;
  best.length = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> code(n - 2, 0);
  std::vector<std::size_t> degree(n);
  Tree cand;
  for (;;) {
    // Decode the Pruefer sequence.
    std::fill(degree.begin(), degree.end(), 1);
    for (std::size_t c : code) ++degree[c];
    cand.edges.clear();
    for (std::size_t c : code) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      cand.edges.push_back(ordered(leaf, c));
      --degree[leaf];
      --degree[c];
    }
    std::size_t u = kNone;
    for (std::size_t v = 0; v < n; ++v) {
      if (degree[v] != 1) continue;
      if (u == kNone) {
        u = v;
      } else {
        cand.edges.push_back(ordered(u, v));
        break;
      }
    }
    cand.length = tree_length(cand, points);
    if (cand.length < best.length) best = cand;

    std::size_t pos = 0;
    while (pos < code.size() && ++code[pos] == n) code[pos++] = 0;
    if (pos == code.size()) break;
  }
  return best;
}

}  // namespace steiner
