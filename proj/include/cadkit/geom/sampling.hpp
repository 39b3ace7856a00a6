#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cadkit/geom/solid.hpp"
#include "cadkit/util/random.hpp"

namespace cadkit::geom {

struct PointCloud {
  std::vector<Vec3> points;
  std::uint64_t seed = 0;
  bool normalized = false;
};

/// n points drawn area-uniformly from the boundary of the composite solid.
/// Throws SamplingExhausted when fewer than 1 in 10^4 candidates survive.
PointCloud sample_surface(const Solid& solid, std::size_t n, std::uint64_t seed);

/// Centers the bounding box at the origin and scales its longest edge to 1.
PointCloud normalize(const PointCloud& cloud);

/// One "x y z" line per point, 9 significant digits.
void write_xyz(std::ostream& out, const PointCloud& cloud);

}  // namespace cadkit::geom
