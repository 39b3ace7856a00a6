#pragma once

#include <vector>

#include "cadkit/code/diagnostic.hpp"
#include "cadkit/code/program.hpp"

namespace cadkit::code {

/// Geometric executability checks. Returns no errors iff every loop is
/// closed and non-degenerate, loops do not cross, every extrusion has
/// nonzero extent and scale, and at least one sketch is extruded.
///
/// Whether a Cut leaves anything behind is only known after execution.
std::vector<Diagnostic> validate(const Program& program);

}  // namespace cadkit::code
