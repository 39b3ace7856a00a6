#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cadkit/code/program.hpp"
#include "cadkit/geom/curve2d.hpp"

namespace cadkit::geom {

/// Sketch plane placement. World point = origin + scale * (u x + v y) + w n.
struct Frame {
  Vec3 origin;
  Vec3 x_axis{1, 0, 0};
  Vec3 y_axis{0, 1, 0};
  Vec3 normal{0, 0, 1};
  double scale = 1.0;

  Vec3 to_world(Vec2 uv, double w) const {
    return origin + (x_axis * uv.x + y_axis * uv.y) * scale + normal * w;
  }
  Vec2 to_plane(Vec3 p) const {
    const Vec3 d = p - origin;
    return {dot(d, x_axis) / scale, dot(d, y_axis) / scale};
  }
  double height(Vec3 p) const { return dot(p - origin, normal); }
  bool operator==(const Frame&) const = default;
};

Frame frame_from(const code::ExtrudeParams& params);

/// Axial interval [near, far] of an extrusion along the frame normal.
std::pair<double, double> extent_interval(const code::ExtrudeParams& params);

/// p -> R p + t with R given by its columns.
struct RigidTransform {
  Vec3 c0{1, 0, 0};
  Vec3 c1{0, 1, 0};
  Vec3 c2{0, 0, 1};
  Vec3 t;

  Vec3 rotate(Vec3 v) const { return c0 * v.x + c1 * v.y + c2 * v.z; }
  Vec3 apply(Vec3 p) const { return rotate(p) + t; }
};

enum class SetOp { Union, Difference, Intersection };
SetOp set_op(code::BoolOp op);
const char* to_string(SetOp op);

enum class Membership { Outside, Boundary, Inside };
const char* to_string(Membership m);

struct Leaf {
  Profile profile;
  Frame frame;
  double near = 0.0;
  double far = 1.0;
  SetOp op = SetOp::Union;
  bool operator==(const Leaf&) const = default;
};

/// Points closer than this to a surface classify as boundary.
inline constexpr double kBoundaryEps = 1e-7;

/// Left-deep CSG tree: starting from the empty set, each leaf is combined
/// with the accumulator by its operation, in program order.
class Solid {
 public:
  Solid() = default;
  explicit Solid(std::vector<Leaf> leaves) : leaves_(std::move(leaves)) {}

  const std::vector<Leaf>& leaves() const { return leaves_; }
  bool operator==(const Solid& other) const { return leaves_ == other.leaves_; }

  Solid transformed(const RigidTransform& xf) const;

  Membership contains(Vec3 p) const;
  Membership leaf_membership(std::size_t leaf, Vec3 p) const;
  /// contains() with one leaf's status forced to `forced`.
  Membership classify_with(Vec3 p, std::size_t leaf, Membership forced) const;

  /// Bounding box of the additive leaves; encloses the solid.
  Box3 bounds() const;
  /// Offset used by boundary-survival probes: 1e-5 of the longest box edge.
  double probe_offset() const;

 private:
  std::vector<Leaf> leaves_;
};

Membership combine(Membership acc, Membership leaf, SetOp op);

Profile evaluate_sketch(const code::SketchView& sketch);
Profile evaluate_sketch(const code::Program& program, code::SketchId sketch);

/// Builds the CSG tree of a program. Throws GeomError on invalid sketches,
/// zero extents, and EmptyResult when nothing of the solid remains.
Solid execute(const code::Program& program);

}  // namespace cadkit::geom
