#pragma once

#include <cstddef>
#include <vector>

#include "steiner/candidates.hpp"
#include "steiner/graph.hpp"
#include "steiner/random.hpp"
#include "steiner/solver.hpp"

namespace steiner {

/// MST over the terminals, no Steiner points.
Solution mst_baseline(const PointSet& terminals);

/// r ~ U{0..|S|-2} points drawn uniformly from the bounding box of S, then
/// the MST over the union. Throws std::invalid_argument when |S| < 2.
Solution rand1(const PointSet& terminals, Rng& rng);

/// The incremental loop with a uniformly random candidate in place of the
/// policy, first-increment acceptance.
Solution rand2(const PointSet& terminals, const CandidateConfig& candidates, Rng& rng);

struct HeuristicConfig {
  std::size_t iterations = 10;
  void validate() const;
};

/// Greedy Fermat-point insertion. Each iteration tries the Fermat point of
/// every pair of MST edges meeting below 120 degrees, keeps the single best
/// insertion, then relaxes the added points (degree-3 points move to the
/// Fermat point of their neighbors, points of degree <= 2 are dropped).
/// Stops early once no insertion shortens the tree.
Solution insertion_heuristic(const PointSet& terminals, const HeuristicConfig& cfg);

inline constexpr std::size_t kOracleMaxTerminals = 5;

struct OracleResult {
  double length = 0.0;
  /// Steiner coordinates of the winning full topology, in topology order;
  /// some may coincide with a neighbor when the optimum is degenerate.
  std::vector<Point> steiner_points;
  /// Topology over terminals [0, n) and Steiner points [n, 2n - 2).
  std::vector<Edge> edges;
  std::size_t topology_id = 0;  // == topologies_examined when the plain MST won
  std::size_t topologies_examined = 0;
};

/// Full-topology enumeration for 2 <= |S| <= 5. Every topology is relaxed by
/// Fermat sweeps (until the largest move is below 1e-10 or 1e5 sweeps) and
/// the shortest one wins. Throws std::invalid_argument outside that range.
OracleResult exact_oracle(const PointSet& terminals);

/// Terminals plus the non-degenerate oracle Steiner points, connected by
/// their MST.
Solution oracle_solution(const PointSet& terminals, const OracleResult& oracle);

/// All full Steiner topologies on n terminals, (2n-5)!! of them for n >= 3,
/// each as an edge list over terminals [0, n) and Steiner points [n, 2n-2).
std::vector<std::vector<Edge>> full_topologies(std::size_t n);

}  // namespace steiner
