#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cadkit/code/program.hpp"

namespace cadkit::code {

/// Level q maps to q / 255 * span + min.
struct QuantRange {
  double min = 0.0;
  double span = 1.0;

  constexpr double dequantize(Level q) const { return static_cast<double>(q) / 255.0 * span + min; }

  Level quantize(double value) const {
    const double q = std::round((value - min) / span * 255.0);
    return static_cast<Level>(std::clamp(q, 0.0, 255.0));
  }
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sketch-plane coordinates and radii live in the unit square.
inline constexpr QuantRange kCoordRange{0.0, 1.0};
inline constexpr QuantRange kRadiusRange{0.0, 1.0};
// Angles step in 1/256 turns so quarter turns are exact levels (64, 128, 192).
inline constexpr QuantRange kAngleRange{0.0, kTwoPi * 255.0 / 256.0};
// Origins step in 1/128 so that level 128 is exactly zero.
inline constexpr QuantRange kOriginRange{-1.0, 255.0 / 128.0};
inline constexpr QuantRange kScaleRange{0.0, 1.0};
inline constexpr QuantRange kDistanceRange{-1.0, 2.0};

}  // namespace cadkit::code
