#include <doctest.h>

#include <random>
#include <set>

#include "steiner/candidates.hpp"
#include "steiner/graph.hpp"
#include "support.hpp"

using namespace steiner;
using testing::kSqrt3;

namespace {

const std::vector<Point> kTriangle{{0, 0}, {1, 0}, {0.5, 0.8660254037844386}};
const std::vector<Point> kSquare{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

CandidateConfig config(CandidateMethod m, std::size_t k_star, std::size_t k_prime = 3) {
  CandidateConfig c;
  c.method = m;
  c.k_star = k_star;
  c.k_prime = k_prime;
  return c;
}

std::set<std::pair<std::size_t, std::size_t>> arc_pairs(const CandidateSet& c) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const Provenance& p : c.provenance) out.emplace(p.u, p.v);
  return out;
}

}  // namespace

TEST_CASE("knn on the equilateral triangle") {
  const CandidateSet c = knn_candidates(kTriangle, config(CandidateMethod::Knn, 1, 1));
  // 1-NN sets {0:{1}, 1:{0}, 2:{0}} -> pairs (0,1), (0,2), two sides each.
  CHECK(arc_pairs(c) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}});
  CHECK(c.generated == 4);
  // Both inward arc midpoints are the centroid, so one of them is a duplicate.
  CHECK(c.size() == 3);
}

TEST_CASE("knn counts") {
  const CandidateSet two = knn_candidates(std::vector<Point>{{0, 0}, {1, 0}}, config(CandidateMethod::Knn, 9, 1));
  CHECK(two.size() == 18);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = testing::random_points(rng, 8);
    const auto cfg = config(CandidateMethod::Knn, 4, 3);
    const CandidateSet c = knn_candidates(pts, cfg);
    CHECK(c.size() <= 2 * cfg.k_star * cfg.k_prime * pts.size());
    CHECK(c.generated == 2 * cfg.k_star * arc_pairs(c).size());
  }
  CHECK_THROWS_AS(knn_candidates(std::vector<Point>{{0, 0}}, config(CandidateMethod::Knn, 1)),
                  std::invalid_argument);
}

TEST_CASE("mst candidates") {
  const CandidateSet tri = mst_candidates(kTriangle, config(CandidateMethod::Mst, 1));
  CHECK(tri.generated == 4);
  CHECK(tri.size() == 3);

  const CandidateSet sq = mst_candidates(kSquare, config(CandidateMethod::Mst, 1));
  CHECK(sq.size() == 6);

  // Collinear: candidates mirror across the line.
  const CandidateSet line = mst_candidates(std::vector<Point>{{0, 0}, {1, 0}, {3, 0}}, config(CandidateMethod::Mst, 3));
  REQUIRE(line.size() == 12);
  for (const Point& p : line.points) {
    bool mirrored = false;
    for (const Point& q : line.points) mirrored = mirrored || distance(q, Point{p.x, -p.y}) < 1e-12;
    CHECK(mirrored);
  }

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = testing::random_points(rng, 7);
    const CandidateSet c = mst_candidates(pts, config(CandidateMethod::Mst, 9));
    CHECK(c.size() <= 2 * 9 * (pts.size() - 1));
  }
}

TEST_CASE("arc candidates lie on the arc of their pair") {
  std::mt19937_64 rng(12);
  for (CandidateMethod m : {CandidateMethod::Knn, CandidateMethod::Mst}) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto pts = testing::random_points(rng, 6);
      const CandidateSet c = make_candidates(pts, config(m, 5));
      for (std::size_t i = 0; i < c.size(); ++i) {
        const Provenance& p = c.provenance[i];
        CHECK(std::abs(*angle_at(c.points[i], pts[p.u], pts[p.v]) - 120.0) <= 1e-6);
      }
    }
  }
}

TEST_CASE("knn pairs cover the mst pairs when mst edges join near neighbors") {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = testing::random_points(rng, 7);
    const auto cfg = config(CandidateMethod::Knn, 2, 3);
    // Does every MST edge join k'-nearest neighbors (in either direction)?
    auto knn_of = [&](std::size_t v) {
      std::vector<std::size_t> order;
      for (std::size_t u = 0; u < pts.size(); ++u)
        if (u != v) order.push_back(u);
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return distance(pts[v], pts[a]) < distance(pts[v], pts[b]); });
      order.resize(cfg.k_prime);
      return std::set<std::size_t>(order.begin(), order.end());
    };
    bool holds = true;
    for (const Edge& e : mst(pts).edges) holds = holds && (knn_of(e.u).count(e.v) || knn_of(e.v).count(e.u));
    if (!holds) continue;
    ++checked;
    const auto k = arc_pairs(knn_candidates(pts, cfg));
    for (const auto& pr : arc_pairs(mst_candidates(pts, cfg))) CHECK(k.count(pr) == 1);
  }
  CHECK(checked > 50);
}

TEST_CASE("grid candidates") {
  const std::vector<Point> box{{0, 0}, {1, 1}};
  auto cfg = config(CandidateMethod::Grid, 1);
  cfg.grid_resolution = 3;
  const CandidateSet g3 = grid_candidates(box, cfg);
  REQUIRE(g3.size() == 9);
  std::set<std::pair<double, double>> got;
  for (const Point& p : g3.points) got.emplace(p.x, p.y);
  for (double x : {0.25, 0.5, 0.75})
    for (double y : {0.25, 0.5, 0.75}) CHECK(got.count({x, y}) == 1);

  cfg.grid_resolution = 2;
  CHECK(grid_candidates(box, cfg).size() == 4);

  // A terminal sitting on a joint removes it; otherwise |I| does not matter.
  cfg.grid_resolution = 3;
  CHECK(grid_candidates(std::vector<Point>{{0, 0}, {1, 1}, {0.5, 0.5}}, cfg).size() == 8);
  CHECK(grid_candidates(std::vector<Point>{{0, 0}, {1, 1}, {0.1, 0.9}}, cfg).size() == 9);

  CHECK_THROWS_AS(grid_candidates(std::vector<Point>{{2, 2}, {2, 2}}, cfg), std::invalid_argument);
  cfg.grid_resolution = 1;
  CHECK_THROWS_AS(grid_candidates(box, cfg), std::invalid_argument);
}

TEST_CASE("no candidate sits on an existing point or on another candidate") {
  std::mt19937_64 rng(30);
  for (CandidateMethod m : {CandidateMethod::Knn, CandidateMethod::Mst, CandidateMethod::Grid}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto pts = testing::random_points(rng, 6);
      const auto cfg = config(m, 9);
      const CandidateSet c = make_candidates(pts, cfg);
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (const Point& p : pts) CHECK(distance(c.points[i], p) > cfg.min_separation);
        for (std::size_t j = i + 1; j < c.size(); ++j) CHECK(distance(c.points[i], c.points[j]) > cfg.min_separation);
      }
      // Same input, same output.
      CHECK(make_candidates(pts, cfg).points == c.points);
    }
  }
}

TEST_CASE("candidate config parsing and validation") {
  CHECK(parse_candidate_method("knn") == CandidateMethod::Knn);
  CHECK(parse_candidate_method("mst") == CandidateMethod::Mst);
  CHECK(parse_candidate_method("grid") == CandidateMethod::Grid);
  CHECK_THROWS_AS(parse_candidate_method("delaunay"), std::invalid_argument);
  CandidateConfig c;
  c.k_star = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
