#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "steiner/geometry.hpp"

namespace steiner {

enum class CandidateMethod { Knn, Mst, Grid };

std::string_view to_string(CandidateMethod m);
/// Accepts "knn", "mst", "grid". Throws std::invalid_argument otherwise.
CandidateMethod parse_candidate_method(std::string_view s);

struct CandidateConfig {
  CandidateMethod method = CandidateMethod::Mst;
  std::size_t k_star = 9;
  std::size_t k_prime = 3;
  std::size_t grid_resolution = 5;
  bool both_sides = true;
  double min_separation = 1e-6;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Where a candidate came from: a Steiner arc over the pair (u, v) of the
/// current point set, or a lattice joint (row, col).
struct Provenance {
  enum class Kind { Arc, Grid } kind = Kind::Arc;
  std::size_t u = 0;
  std::size_t v = 0;
  Side side = Side::Left;
  std::size_t row = 0;
  std::size_t col = 0;
};

struct CandidateSet {
  std::vector<Point> points;
  std::vector<Provenance> provenance;
  /// Points produced before deduplication and collision filtering.
  std::size_t generated = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Arcs between each point and its k' nearest neighbours (ties toward the
/// lower index; k' is capped at |I| - 1). Throws when |I| < 2.
CandidateSet knn_candidates(std::span<const Point> current, const CandidateConfig& cfg);

/// Arcs over the edges of MST(current). Throws when |I| < 2.
CandidateSet mst_candidates(std::span<const Point> current, const CandidateConfig& cfg);

/// g x g interior lattice joints of the bounding box, at fractions
/// i / (g + 1). Throws when every point coincides.
CandidateSet grid_candidates(std::span<const Point> current, const CandidateConfig& cfg);

/// Dispatch on cfg.method.
CandidateSet make_candidates(std::span<const Point> current, const CandidateConfig& cfg);

}  // namespace steiner
