#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "steiner/baselines.hpp"
#include "support.hpp"

using namespace steiner;
using testing::kSqrt3;

namespace {

const PointSet kTriangle(std::vector<Point>{{0, 0}, {1, 0}, {0.5, 0.8660254037844386}});
const PointSet kSquare(std::vector<Point>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});

double mst_with(std::span<const Point> terminals, const std::vector<double>& free) {
  std::vector<Point> pts(terminals.begin(), terminals.end());
  for (std::size_t i = 0; i + 1 < free.size(); i += 2) pts.push_back({free[i], free[i + 1]});
  return mst_length(pts);
}

// Independent estimate: minimize MST(S + P) over n - 2 free points by
// random-direction search from many random starts (axis moves alone stall
// on the kinks of the MST length). Always an upper bound on the optimum.
double restart_search(const PointSet& s, std::mt19937_64& rng) {
  const std::size_t dims = 2 * (s.size() - 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  double best = mst_length(s.points);
  for (int start = 0; start < 100; ++start) {
    std::vector<double> x(dims);
    for (double& v : x) v = u(rng);
    double f = mst_with(s.terminals(), x);
    double h = 0.25;
    while (h > 1e-9) {
      bool moved = false;
      for (int tries = 0; tries < 40 && !moved; ++tries) {
        std::vector<double> y = x;
        for (double& v : y) v += h * z(rng);
        const double g = mst_with(s.terminals(), y);
        if (g < f) {
          f = g;
          x = y;
          moved = true;
        }
      }
      if (!moved) h *= 0.5;
    }
    best = std::min(best, f);
  }
  return best;
}

std::vector<std::vector<std::size_t>> adjacency(const Tree& t, std::size_t n) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Edge& e : t.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

}  // namespace

TEST_CASE("full topology counts") {
  CHECK(full_topologies(3).size() == 1);
  CHECK(full_topologies(4).size() == 3);
  CHECK(full_topologies(5).size() == 15);
  for (const auto& topo : full_topologies(5)) {
    CHECK(topo.size() == 7);
    CHECK(is_spanning_tree(Tree{topo, 0.0}, 8));
    const auto adj = adjacency(Tree{topo, 0.0}, 8);
    for (std::size_t i = 0; i < 5; ++i) CHECK(adj[i].size() == 1);
    for (std::size_t i = 5; i < 8; ++i) CHECK(adj[i].size() == 3);
  }
}

TEST_CASE("oracle examples") {
  CHECK(exact_oracle(kTriangle).length == doctest::Approx(kSqrt3).epsilon(1e-9));
  CHECK(std::abs(exact_oracle(kSquare).length - (1.0 + kSqrt3)) <= 1e-4);

  const PointSet line(std::vector<Point>{{0, 0}, {1, 0}, {2.5, 0}, {4, 0}});
  CHECK(std::abs(exact_oracle(line).length - 4.0) <= 1e-9);

  // An obtuse corner of 150 degrees: the MST is already optimal.
  const PointSet obtuse(std::vector<Point>{{0, 0}, {1, 0}, {1 + std::cos(0.5236), std::sin(0.5236)}});
  CHECK(std::abs(exact_oracle(obtuse).length - mst_length(obtuse.points)) <= 1e-9);

  const PointSet two(std::vector<Point>{{0, 0}, {3, 4}});
  CHECK(exact_oracle(two).length == 5.0);

  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(exact_oracle(PointSet(testing::random_points(rng, 6))), std::invalid_argument);
  CHECK_THROWS_AS(exact_oracle(PointSet(testing::random_points(rng, 1))), std::invalid_argument);
}

TEST_CASE("oracle agrees with a direct search over Steiner coordinates") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> nd(3, 5);
  int tight = 0;
  const int trials = 25;
  for (int trial = 0; trial < trials; ++trial) {
    const PointSet s(testing::random_points(rng, nd(rng)));
    const OracleResult o = exact_oracle(s);
    const double search = restart_search(s, rng);
    CHECK(o.length <= search + 1e-9);
    if (o.length >= search - 1e-5) ++tight;

    const double m = mst_length(s.points);
    CHECK(o.length <= m + 1e-12);
    CHECK(o.length >= kSqrt3 / 2.0 * m - 1e-12);

    const Solution sol = oracle_solution(s, o);
    CHECK(std::abs(sol.length - o.length) <= 1e-7);
    CHECK(sol.points.steiner_points().size() <= s.size() - 2);
  }
  // The oracle must not be beaten, and the search should find the same value.
  CHECK(tight == trials);
}

TEST_CASE("oracle Steiner points meet their neighbours at 120 degrees") {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const PointSet s(testing::random_points(rng, 5));
    const Solution sol = oracle_solution(s, exact_oracle(s));
    const auto adj = adjacency(sol.tree, sol.points.size());
    for (std::size_t v = s.size(); v < sol.points.size(); ++v) {
      REQUIRE(adj[v].size() == 3);
      for (std::size_t a = 0; a < 3; ++a) {
        const auto ang = angle_at(sol.points[v], sol.points[adj[v][a]], sol.points[adj[v][(a + 1) % 3]]);
        REQUIRE(ang.has_value());
        CHECK(std::abs(*ang - 120.0) <= 1e-3);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("insertion heuristic") {
  const Solution tri = insertion_heuristic(kTriangle, HeuristicConfig{1});
  CHECK(tri.length == doctest::Approx(kSqrt3).epsilon(1e-9));
  CHECK(tri.points.steiner_points().size() == 1);

  const Solution sq = insertion_heuristic(kSquare, HeuristicConfig{2});
  CHECK(std::abs(sq.length - (1.0 + kSqrt3)) <= 1e-3);

  // Every MST corner is already 120 degrees or more.
  const double c = std::cos(2.0943951023931953), s = std::sin(2.0943951023931953);
  const PointSet star(std::vector<Point>{{0, 0}, {1, 0}, {c, s}, {c, -s}});
  const Solution st = insertion_heuristic(star, HeuristicConfig{5});
  CHECK(st.points.size() == 4);
  CHECK(st.length == doctest::Approx(3.0).epsilon(1e-12));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const PointSet p(testing::random_points(rng, 8));
    const Solution h = insertion_heuristic(p, HeuristicConfig{});
    CHECK(h.length <= mst_length(p.points) + 1e-12);
    CHECK(h.points.steiner_points().size() <= p.size() - 2);
    CHECK(std::abs(h.length - tree_length(h.tree, h.points)) <= 1e-12);
    for (std::size_t i = 1; i < h.trace.size(); ++i) CHECK(h.trace[i] <= h.trace[i - 1] + 1e-12);
  }

  CHECK_THROWS_AS(insertion_heuristic(kTriangle, HeuristicConfig{0}), std::invalid_argument);
}

TEST_CASE("random baselines") {
  std::mt19937_64 gen(5);
  CandidateConfig cands;
  cands.k_star = 3;
  for (int trial = 0; trial < 30; ++trial) {
    const PointSet s(testing::random_points(gen, 5));
    const double oracle = exact_oracle(s).length;
    Rng a(trial), b(trial);
    const Solution r1 = rand1(s, a);
    CHECK(r1.length >= oracle - 1e-9);
    CHECK(r1.points.steiner_points().size() <= 3);
    CHECK(r1.length == rand1(s, b).length);

    Rng c(trial);
    const Solution r2 = rand2(s, cands, c);
    CHECK(r2.length <= mst_length(s.points) + 1e-12);
    CHECK(r2.length >= oracle - 1e-9);
  }

  const PointSet two(std::vector<Point>{{0, 0}, {3, 4}});
  Rng rng(1);
  CHECK(rand1(two, rng).length == 5.0);
  CHECK(rand2(two, cands, rng).length == 5.0);
  CHECK(mst_baseline(kSquare).length == 3.0);
}
