#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "steiner/geometry.hpp"
#include "steiner/graph.hpp"

namespace testing {

inline std::vector<steiner::Point> random_points(std::mt19937_64& rng, std::size_t n, double lo = 0.0,
                                                 double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<steiner::Point> pts(n);
  for (auto& p : pts) {
    p.x = u(rng);
    p.y = u(rng);
  }
  return pts;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

inline const double kSqrt3 = std::sqrt(3.0);

}  // namespace testing
