#include "steiner/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace steiner {

namespace {

void require_terminals(const PointSet& s, const char* who) {
  if (s.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 terminals");
}

Solution solution_from_points(std::vector<Point> points, std::size_t terminal_count,
                              std::vector<double> trace) {
  Solution sol;
  sol.points.points = std::move(points);
  sol.points.terminal_count = terminal_count;
  sol.tree = mst(sol.points);
  sol.length = sol.tree.length;
  sol.trace = std::move(trace);
  sol.trace.push_back(sol.length);
  return sol;
}

}  // namespace

Solution mst_baseline(const PointSet& terminals) {
  require_terminals(terminals, "mst_baseline");
  return solution_from_points(terminals.points, terminals.size(), {});
}

Solution rand1(const PointSet& terminals, Rng& rng) {
  require_terminals(terminals, "rand1");
  const std::size_t n = terminals.size();
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const Point& p : terminals.points) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  std::uniform_int_distribution<std::size_t> count(0, n - 2);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  const std::size_t r = count(rng);
  std::vector<Point> points = terminals.points;
  const double initial = mst_length(points);
  for (std::size_t i = 0; i < r; ++i) {
    const double tx = ux(rng);
    const double ty = ux(rng);
    points.push_back({lo_x + tx * (hi_x - lo_x), lo_y + ty * (hi_y - lo_y)});
  }
  return solution_from_points(std::move(points), n, {initial});
}

Solution rand2(const PointSet& terminals, const CandidateConfig& candidates, Rng& rng) {
  require_terminals(terminals, "rand2");
  const Chooser choose = [&](std::span<const Point>, const CandidateSet& cands) {
    std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
    const std::size_t i = pick(rng);
    return Choice{i, -std::log(static_cast<double>(cands.size())), Var{}};
  };
  return to_solution(construct(terminals, candidates, StoppingCriterion::FirstIncrement, choose));
}

// ---------------------------------------------------------------------------
// Insertion heuristic

void HeuristicConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("heuristic iterations must be at least 1");
}

namespace {

constexpr double kImprove = 1e-12;

std::vector<std::vector<std::size_t>> adjacency(const Tree& t, std::size_t n) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Edge& e : t.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

// Drops added points of degree <= 2 and pulls degree-3 ones to the Fermat
// point of their neighbors. Never lengthens the MST.
void relax_added(std::vector<Point>& points, std::size_t n_terminals) {
  double current = mst_length(points);
  for (int round = 0; round < 1000; ++round) {
    const Tree t = mst(points);
    const auto adj = adjacency(t, points.size());

    std::vector<Point> next(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(n_terminals));
    for (std::size_t i = n_terminals; i < points.size(); ++i) {
      if (adj[i].size() <= 2) continue;
      next.push_back(points[i]);
    }
    if (next.size() != points.size()) {
      points = std::move(next);
      current = mst_length(points);
      continue;
    }

    bool moved = false;
    std::vector<Point> trial = points;
    for (std::size_t i = n_terminals; i < trial.size(); ++i) {
      if (adj[i].size() != 3) continue;
      const Point f = fermat_point(trial[adj[i][0]], trial[adj[i][1]], trial[adj[i][2]]);
      if (distance(f, trial[i]) > 0.0) {
        trial[i] = f;
        moved = true;
      }
    }
    if (!moved) break;
    const double len = mst_length(trial);
    if (len >= current - kImprove) break;
    points = std::move(trial);
    current = len;
  }
}

}  // namespace

Solution insertion_heuristic(const PointSet& terminals, const HeuristicConfig& cfg) {
  require_terminals(terminals, "insertion_heuristic");
  cfg.validate();
  const std::size_t n = terminals.size();
  std::vector<Point> points = terminals.points;
  std::vector<double> trace{mst_length(points)};

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Tree t = mst(points);
    const auto adj = adjacency(t, points.size());
    const double base = t.length;
    double best_len = base - kImprove;
    std::optional<Point> best;
    std::vector<Point> trial = points;
    trial.push_back({});

    for (std::size_t v = 0; v < points.size(); ++v) {
      for (std::size_t a = 0; a < adj[v].size(); ++a) {
        for (std::size_t b = a + 1; b < adj[v].size(); ++b) {
          const Point pu = points[adj[v][a]], pw = points[adj[v][b]];
          const auto ang = angle_at(points[v], pu, pw);
          if (!ang || *ang >= 120.0) continue;
          const Point f = fermat_point(pu, points[v], pw);
          const bool duplicate = std::any_of(points.begin(), points.end(),
                                             [&](const Point& p) { return distance(p, f) <= 1e-12; });
          if (duplicate) continue;
          trial.back() = f;
          const double len = mst_length(trial);
          if (len < best_len) {
            best_len = len;
            best = f;
          }
        }
      }
    }
    if (!best) break;
    points.push_back(*best);
    relax_added(points, n);
    trace.push_back(mst_length(points));
  }
  trace.pop_back();
  return solution_from_points(std::move(points), n, std::move(trace));
}

// ---------------------------------------------------------------------------
// Exact oracle

std::vector<std::vector<Edge>> full_topologies(std::size_t n) {
  if (n < 3) throw std::invalid_argument("full_topologies: need at least 3 terminals");
  // Steiner point k (0-based) gets vertex id n + k.
  std::vector<std::vector<Edge>> current{{Edge{0, n}, Edge{1, n}, Edge{2, n}}};
  for (std::size_t term = 3; term < n; ++term) {
    const std::size_t s = n + term - 2;
    std::vector<std::vector<Edge>> next;
    for (const auto& topo : current) {
      for (std::size_t e = 0; e < topo.size(); ++e) {
        std::vector<Edge> t = topo;
        const Edge old = t[e];
        t[e] = Edge{old.u, s};
        t.push_back(Edge{old.v, s});
        t.push_back(Edge{term, s});
        next.push_back(std::move(t));
      }
    }
    current = std::move(next);
  }
  return current;
}

namespace {

constexpr double kOracleMoveTol = 1e-10;
constexpr std::size_t kOracleMaxSweeps = 100'000;
constexpr double kMergeTol = 1e-8;

struct Relaxation {
  const std::vector<Point>* terminals;
  std::vector<std::vector<std::size_t>> nbr;  // per Steiner point, three vertex ids

  Point at(const std::vector<Point>& steiner, std::size_t id) const {
    const std::size_t n = terminals->size();
    return id < n ? (*terminals)[id] : steiner[id - n];
  }

  double length(const std::vector<Point>& steiner, const std::vector<Edge>& edges) const {
    double len = 0.0;
    for (const Edge& e : edges) len += distance(at(steiner, e.u), at(steiner, e.v));
    return len;
  }

  void sweep_until_still(std::vector<Point>& steiner) const {
    for (std::size_t sweep = 0; sweep < kOracleMaxSweeps; ++sweep) {
      double max_move = 0.0;
      for (std::size_t k = 0; k < steiner.size(); ++k) {
        const Point f = fermat_point(at(steiner, nbr[k][0]), at(steiner, nbr[k][1]), at(steiner, nbr[k][2]));
        max_move = std::max(max_move, distance(f, steiner[k]));
        steiner[k] = f;
      }
      if (max_move < kOracleMoveTol) return;
    }
  }

  void harmonic(std::vector<Point>& steiner) const {
    for (int it = 0; it < 2000; ++it) {
      double max_move = 0.0;
      for (std::size_t k = 0; k < steiner.size(); ++k) {
        const Point m = (1.0 / 3.0) * (at(steiner, nbr[k][0]) + at(steiner, nbr[k][1]) + at(steiner, nbr[k][2]));
        max_move = std::max(max_move, distance(m, steiner[k]));
        steiner[k] = m;
      }
      if (max_move < 1e-14) return;
    }
  }
};

// Coordinate moves stall where two adjacent Steiner points coincide, since
// neither can leave alone. Nudge each toward its own other neighbors and
// re-relax, keeping the result only if it is shorter.
bool split_merged(const Relaxation& r, const std::vector<Edge>& edges, std::vector<Point>& steiner,
                  double& len) {
  const std::size_t n = r.terminals->size();
  bool improved = false;
  for (const Edge& e : edges) {
    if (e.u < n || e.v < n) continue;
    const std::size_t i = e.u - n, j = e.v - n;
    if (distance(steiner[i], steiner[j]) > kMergeTol) continue;
    for (double step : {1e-3, 1e-2, 1e-1}) {
      std::vector<Point> trial = steiner;
      auto pull = [&](std::size_t k, std::size_t other) {
        Point target{};
        for (std::size_t id : r.nbr[k])
          if (id != n + other) target = target + 0.5 * r.at(steiner, id);
        trial[k] = trial[k] + step * (target - trial[k]);
      };
      pull(i, j);
      pull(j, i);
      r.sweep_until_still(trial);
      const double l = r.length(trial, edges);
      if (l < len - 1e-13) {
        steiner = std::move(trial);
        len = l;
        improved = true;
        break;
      }
    }
  }
  return improved;
}

}  // namespace

OracleResult exact_oracle(const PointSet& terminals) {
  const std::size_t n = terminals.size();
  if (n < 2) throw std::invalid_argument("exact_oracle: need at least 2 terminals");
  if (n > kOracleMaxTerminals)
    throw std::invalid_argument("exact_oracle: " + std::to_string(n) + " terminals exceeds the limit of " +
                                std::to_string(kOracleMaxTerminals));
  OracleResult best;
  if (n == 2) {
    best.length = distance(terminals[0], terminals[1]);
    best.edges = {Edge{0, 1}};
    best.topologies_examined = 1;
    return best;
  }

  const auto topologies = full_topologies(n);
  best.length = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < topologies.size(); ++id) {
    const auto& edges = topologies[id];
    Relaxation r{&terminals.points, std::vector<std::vector<std::size_t>>(n - 2)};
    for (const Edge& e : edges) {
      if (e.u >= n) r.nbr[e.u - n].push_back(e.v);
      if (e.v >= n) r.nbr[e.v - n].push_back(e.u);
    }

    Point centroid{};
    for (const Point& p : terminals.points) centroid = centroid + (1.0 / static_cast<double>(n)) * p;
    std::vector<Point> steiner(n - 2, centroid);
    r.harmonic(steiner);
    r.sweep_until_still(steiner);
    double len = r.length(steiner, edges);
    for (int escape = 0; escape < 8 && split_merged(r, edges, steiner, len); ++escape) {
    }

    if (len < best.length) {
      best.length = len;
      best.steiner_points = steiner;
      best.edges = edges;
      best.topology_id = id;
    }
  }
  best.topologies_examined = topologies.size();
  // Degenerate optima can leave the winner a hair above the plain MST.
  const double tree = mst_length(terminals.points);
  if (tree < best.length) {
    best.length = tree;
    best.steiner_points.clear();
    best.edges = mst(terminals).edges;
    best.topology_id = topologies.size();
  }
  return best;
}

Solution oracle_solution(const PointSet& terminals, const OracleResult& oracle) {
  std::vector<Point> points = terminals.points;
  for (const Point& s : oracle.steiner_points) {
    const bool dup = std::any_of(points.begin(), points.end(),
                                 [&](const Point& p) { return distance(p, s) <= 1e-9; });
    if (!dup) points.push_back(s);
  }
  return solution_from_points(std::move(points), terminals.size(), {mst_length(terminals.points)});
}

}  // namespace steiner
