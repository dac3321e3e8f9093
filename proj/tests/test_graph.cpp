#include <doctest.h>

#include <algorithm>
#include <random>

#include "steiner/graph.hpp"
#include "support.hpp"

using namespace steiner;

TEST_CASE("mst examples") {
  const Tree line = mst(std::vector<Point>{{0, 0}, {1, 0}, {2, 0}});
  CHECK(line.length == 2.0);
  REQUIRE(line.edges.size() == 2);
  CHECK(line.edges[0] == Edge{0, 1});
  CHECK(line.edges[1] == Edge{1, 2});

  const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(mst(square).length == 3.0);
  CHECK(mst_length(square) == 3.0);

  const Tree single = mst(std::vector<Point>{{0.3, 0.4}});
  CHECK(single.edges.empty());
  CHECK(single.length == 0.0);

  CHECK_THROWS_AS(mst(std::vector<Point>{}), std::invalid_argument);
}

TEST_CASE("mst ties go to the lowest index pair") {
  // Every corner of the square is 1 away from two others; Prim from 0 must
  // attach 1 (lowest), then 2 via 1, then 3 via 0.
  const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Tree t = mst(square);
  REQUIRE(t.edges.size() == 3);
  CHECK(t.edges[0] == Edge{0, 1});
  CHECK(t.edges[1] == Edge{1, 2});
  CHECK(t.edges[2] == Edge{0, 3});
  // Deterministic across calls.
  const Tree again = mst(square);
  CHECK(std::equal(t.edges.begin(), t.edges.end(), again.edges.begin()));
}

TEST_CASE("tree_length") {
  const std::vector<Point> pts{{0, 0}, {0, 5}};
  CHECK(tree_length(Tree{}, pts) == 0.0);
  CHECK(tree_length(Tree{{Edge{0, 1}}, 0.0}, pts) == 5.0);
  CHECK_THROWS_AS(tree_length(Tree{{Edge{0, 2}}, 0.0}, pts), std::out_of_range);
}

TEST_CASE("brute force enumeration matches Prim") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> nd(2, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = testing::random_points(rng, nd(rng));
    const Tree fast = mst(pts);
    const Tree slow = brute_force_mst(pts);
    CHECK(std::abs(fast.length - slow.length) <= 1e-12);
    CHECK(is_spanning_tree(fast, pts.size()));
    CHECK(is_spanning_tree(slow, pts.size()));
    CHECK(std::abs(fast.length - tree_length(fast, pts)) <= 1e-12);
  }
  const Tree two = brute_force_mst(std::vector<Point>{{0, 0}, {3, 4}});
  REQUIRE(two.edges.size() == 1);
  CHECK(two.length == 5.0);

  const Tree chain = brute_force_mst(std::vector<Point>{{0, 0}, {3, 0}, {1, 0}, {2, 0}});
  CHECK(chain.length == doctest::Approx(3.0));
  CHECK(is_spanning_tree(chain, 4));

  CHECK_THROWS(brute_force_mst(std::vector<Point>(9)));
}

TEST_CASE("mst length does not depend on point order") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = testing::random_points(rng, 12);
    const double before = mst_length(pts);
    std::shuffle(pts.begin(), pts.end(), rng);
    CHECK(std::abs(mst_length(pts) - before) <= 1e-12);
  }
}

TEST_CASE("is_spanning_tree rejects cycles and short edge lists") {
  CHECK(is_spanning_tree(Tree{{Edge{0, 1}, Edge{1, 2}}, 0}, 3));
  CHECK_FALSE(is_spanning_tree(Tree{{Edge{0, 1}}, 0}, 3));
  CHECK_FALSE(is_spanning_tree(Tree{{Edge{0, 1}, Edge{0, 1}}, 0}, 3));
  CHECK_FALSE(is_spanning_tree(Tree{{Edge{0, 1}, Edge{1, 3}}, 0}, 3));
}

TEST_CASE("PointSet splits terminals from added points") {
  PointSet s(std::vector<Point>{{0, 0}, {1, 0}});
  s.points.push_back({0.5, 0.5});
  CHECK(s.terminals().size() == 2);
  CHECK(s.steiner_points().size() == 1);
  CHECK(s.steiner_points()[0] == Point{0.5, 0.5});
}
