#pragma once

#include <cstddef>
#include <vector>

#include "cadkit/geom/solid.hpp"

namespace cadkit::geom {

enum class FaceKind { PlanarCap, PlanarSide, CylindricalSide };
const char* to_string(FaceKind kind);

/// A face of one leaf's extrusion, before trimming by the booleans.
/// Caps are parameterized over the profile bounding box; side faces by
/// (curve parameter, height).
struct LeafFace {
  std::size_t leaf = 0;
  FaceKind kind = FaceKind::PlanarCap;
  bool top = false;        // caps
  std::size_t loop = 0;    // sides
  std::size_t curve = 0;   // sides
  double side_sign = 1.0;  // sides: +1 when the 2D curve normal points out of the profile

  bool operator==(const LeafFace&) const = default;
};

struct FacePoint {
  Vec3 point;
  Vec3 normal;     // outward for the leaf
  bool on_patch;   // false where a cap sample falls outside the profile
};

/// Candidate faces of every leaf: bottom cap, top cap, then one side face per
/// curve, loop by loop.
std::vector<LeafFace> leaf_faces(const Solid& solid);

FacePoint evaluate_face(const Solid& solid, const LeafFace& face, double u, double v);
double face_area(const Solid& solid, const LeafFace& face);

/// Inverse of evaluate_face; the result may fall outside [0, 1].
void face_param(const Solid& solid, const LeafFace& face, Vec3 p, double& u, double& v);
/// Closest point on the face's untrimmed, unbounded surface.
Vec3 project_to_surface(const Solid& solid, const LeafFace& face, Vec3 p);
/// Distance to the untrimmed face patch.
double patch_distance(const Solid& solid, const LeafFace& face, Vec3 p);

/// Whether a face point lies on the composite boundary: membership must flip
/// between the two probes at +-delta along the face normal. `outward` is set
/// to the composite's outward normal at the point.
bool survives(const Solid& solid, const LeafFace& face, const FacePoint& fp, double delta, Vec3* outward = nullptr);

/// Whether any cell center of an n x n parameter grid on the face survives.
bool face_survives_somewhere(const Solid& solid, const LeafFace& face, int n);

}  // namespace cadkit::geom
