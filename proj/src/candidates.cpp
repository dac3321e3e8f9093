#include "steiner/candidates.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "steiner/graph.hpp"

namespace steiner {

std::string_view to_string(CandidateMethod m) {
  switch (m) {
    case CandidateMethod::Knn: return "knn";
    case CandidateMethod::Mst: return "mst";
    case CandidateMethod::Grid: return "grid";
  }
  return "?";
}

CandidateMethod parse_candidate_method(std::string_view s) {
  if (s == "knn") return CandidateMethod::Knn;
  if (s == "mst") return CandidateMethod::Mst;
  if (s == "grid") return CandidateMethod::Grid;
  throw std::invalid_argument("unknown candidate method '" + std::string(s) + "'");
}

void CandidateConfig::validate() const {
  if (k_star < 1) throw std::invalid_argument("k_star must be >= 1");
  if (k_prime < 1) throw std::invalid_argument("k_prime must be >= 1");
  if (grid_resolution < 2) throw std::invalid_argument("grid_resolution must be >= 2");
  if (!(min_separation >= 0.0)) throw std::invalid_argument("min_separation must be >= 0");
}

namespace {

class Collector {
 public:
  Collector(std::span<const Point> current, double min_sep)
      : current_(current), min_sep2_(min_sep * min_sep) {}

  void add(Point p, const Provenance& prov) {
    ++out_.generated;
    if (too_close(p, current_) || too_close(p, out_.points)) return;
    out_.points.push_back(p);
    out_.provenance.push_back(prov);
  }

  CandidateSet take() && { return std::move(out_); }

 private:
  bool too_close(Point p, std::span<const Point> pts) const {
    for (const Point& q : pts) {
      const Point d = p - q;
      if (dot(d, d) <= min_sep2_) return true;
    }
    return false;
  }

  std::span<const Point> current_;
  double min_sep2_;
  CandidateSet out_;
};

void add_arc_points(Collector& col, std::span<const Point> pts, std::size_t u, std::size_t v,
                    const CandidateConfig& cfg) {
  for (Side side : {Side::Left, Side::Right}) {
    if (side == Side::Right && !cfg.both_sides) break;
    const SteinerArc arc = steiner_arc(pts[u], pts[v], side);
    for (const Point& p : arc_partition(arc, cfg.k_star)) {
      col.add(p, Provenance{Provenance::Kind::Arc, u, v, side, 0, 0});
    }
  }
}

void require_pair(std::span<const Point> pts, const char* who) {
  if (pts.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 points");
}

}  // namespace

CandidateSet knn_candidates(std::span<const Point> current, const CandidateConfig& cfg) {
  require_pair(current, "knn_candidates");
  cfg.validate();
  const std::size_t n = current.size();
  const std::size_t k = std::min(cfg.k_prime, n - 1);

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> order(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(v));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distance(current[v], current[a]) < distance(current[v], current[b]);
    });
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t u = order[j];
      pairs.emplace(std::min(u, v), std::max(u, v));
    }
    order.resize(n);
  }

  Collector col(current, cfg.min_separation);
  for (const auto& [a, b] : pairs) add_arc_points(col, current, a, b, cfg);
  return std::move(col).take();
}

CandidateSet mst_candidates(std::span<const Point> current, const CandidateConfig& cfg) {
  require_pair(current, "mst_candidates");
  cfg.validate();
  const Tree tree = mst(current);
  Collector col(current, cfg.min_separation);
  for (const Edge& e : tree.edges) add_arc_points(col, current, e.u, e.v, cfg);
  return std::move(col).take();
}

CandidateSet grid_candidates(std::span<const Point> current, const CandidateConfig& cfg) {
  if (current.empty()) throw std::invalid_argument("grid_candidates: empty point set");
  cfg.validate();
  Point lo = current[0];
  Point hi = current[0];
  for (const Point& p : current) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  if (lo == hi) throw std::invalid_argument("grid_candidates: degenerate bounding box");

  const std::size_t g = cfg.grid_resolution;
  const double step = 1.0 / static_cast<double>(g + 1);
  Collector col(current, cfg.min_separation);
  for (std::size_t r = 0; r < g; ++r) {
    const double fy = static_cast<double>(r + 1) * step;
    for (std::size_t c = 0; c < g; ++c) {
      const double fx = static_cast<double>(c + 1) * step;
      const Point p{lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y)};
      col.add(p, Provenance{Provenance::Kind::Grid, 0, 0, Side::Left, r, c});
    }
  }
  return std::move(col).take();
}

CandidateSet make_candidates(std::span<const Point> current, const CandidateConfig& cfg) {
  switch (cfg.method) {
    case CandidateMethod::Knn: return knn_candidates(current, cfg);
    case CandidateMethod::Mst: return mst_candidates(current, cfg);
    case CandidateMethod::Grid: return grid_candidates(current, cfg);
  }
  throw std::invalid_argument("make_candidates: bad method");
}

}  // namespace steiner
