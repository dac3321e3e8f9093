#pragma once

#include <string>

#include "steiner/graph.hpp"

namespace steiner {

/// Standalone SVG document: one <line> per tree edge, a filled <circle> per
/// terminal and a hollow one per Steiner point. The viewBox is the bounding
/// box of the points grown by 5% on every side; y points up.
std::string render_svg(const PointSet& points, const Tree& tree);

}  // namespace steiner
