#include "cadkit/geom/solid.hpp"

#include <cmath>

#include "cadkit/code/quantize.hpp"

namespace cadkit::geom {

Frame frame_from(const code::ExtrudeParams& params) {
  const double theta = code::kAngleRange.dequantize(params.orientation.x);
  const double phi = code::kAngleRange.dequantize(params.orientation.y);
  const double gamma = code::kAngleRange.dequantize(params.orientation.z);

  Frame f;
  f.normal = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
  const Vec3 x0{std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
  const Vec3 y0 = cross(f.normal, x0);
  f.x_axis = x0 * std::cos(gamma) + y0 * std::sin(gamma);
  f.y_axis = cross(f.normal, f.x_axis);
  f.origin = {code::kOriginRange.dequantize(params.origin.x), code::kOriginRange.dequantize(params.origin.y),
              code::kOriginRange.dequantize(params.origin.z)};
  f.scale = code::kScaleRange.dequantize(params.scale);
  return f;
}

std::pair<double, double> extent_interval(const code::ExtrudeParams& params) {
  const double e1 = code::kDistanceRange.dequantize(params.distances[0]);
  const double e2 = code::kDistanceRange.dequantize(params.distances[1]);
  switch (params.extent) {
    case code::ExtentType::OneSided: return {std::min(0.0, e1), std::max(0.0, e1)};
    case code::ExtentType::Symmetric: return {-std::abs(e1), std::abs(e1)};
    case code::ExtentType::TwoSided: return {std::min(-e2, e1), std::max(-e2, e1)};
  }
  return {0.0, 0.0};
}

SetOp set_op(code::BoolOp op) {
  switch (op) {
    case code::BoolOp::NewBody:
    case code::BoolOp::Join: return SetOp::Union;
    case code::BoolOp::Cut: return SetOp::Difference;
    case code::BoolOp::Intersect: return SetOp::Intersection;
  }
  return SetOp::Union;
}

const char* to_string(SetOp op) {
  switch (op) {
    case SetOp::Union: return "Union";
    case SetOp::Difference: return "Difference";
    case SetOp::Intersection: return "Intersection";
  }
  return "?";
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::Outside: return "outside";
    case Membership::Boundary: return "boundary";
    case Membership::Inside: return "inside";
  }
  return "?";
}

// Regularized set algebra on three-valued membership. Off the boundaries
// this reduces to the plain boolean formulas.
Membership combine(Membership a, Membership b, SetOp op) {
  using M = Membership;
  switch (op) {
    case SetOp::Union:
      if (a == M::Inside || b == M::Inside) return M::Inside;
      if (a == M::Boundary || b == M::Boundary) return M::Boundary;
      return M::Outside;
    case SetOp::Difference:
      if (a == M::Outside || b == M::Inside) return M::Outside;
      if (a == M::Inside && b == M::Outside) return M::Inside;
      return M::Boundary;
    case SetOp::Intersection:
      if (a == M::Outside || b == M::Outside) return M::Outside;
      if (a == M::Inside && b == M::Inside) return M::Inside;
      return M::Boundary;
  }
  return M::Outside;
}

Membership Solid::leaf_membership(std::size_t i, Vec3 p) const {
  const Leaf& leaf = leaves_[i];
  const Vec2 uv = leaf.frame.to_plane(p);
  const double w = leaf.frame.height(p);
  const bool in_profile = leaf.profile.contains(uv);
  const double lateral = leaf.frame.scale * leaf.profile.boundary_distance(uv);
  const bool in_range = w >= leaf.near && w <= leaf.far;
  if (in_profile && in_range) {
    const double d = std::min({lateral, w - leaf.near, leaf.far - w});
    return d <= kBoundaryEps ? Membership::Boundary : Membership::Inside;
  }
  const double axial = std::max({0.0, leaf.near - w, w - leaf.far});
  const double d = in_profile ? axial : std::hypot(lateral, axial);
  return d <= kBoundaryEps ? Membership::Boundary : Membership::Outside;
}

Solid Solid::transformed(const RigidTransform& xf) const {
  std::vector<Leaf> out = leaves_;
  for (auto& leaf : out) {
    leaf.frame.origin = xf.apply(leaf.frame.origin);
    leaf.frame.x_axis = xf.rotate(leaf.frame.x_axis);
    leaf.frame.y_axis = xf.rotate(leaf.frame.y_axis);
    leaf.frame.normal = xf.rotate(leaf.frame.normal);
  }
  return Solid(std::move(out));
}

Membership Solid::contains(Vec3 p) const {
  Membership acc = Membership::Outside;
  for (std::size_t i = 0; i < leaves_.size(); ++i) acc = combine(acc, leaf_membership(i, p), leaves_[i].op);
  return acc;
}

Membership Solid::classify_with(Vec3 p, std::size_t leaf, Membership forced) const {
  Membership acc = Membership::Outside;
  for (std::size_t i = 0; i < leaves_.size(); ++i)
    acc = combine(acc, i == leaf ? forced : leaf_membership(i, p), leaves_[i].op);
  return acc;
}

Box3 Solid::bounds() const {
  Box3 box;
  for (const auto& leaf : leaves_) {
    if (leaf.op == SetOp::Difference) continue;
    const Box2 b = leaf.profile.bounds();
    for (double u : {b.lo.x, b.hi.x})
      for (double v : {b.lo.y, b.hi.y})
        for (double w : {leaf.near, leaf.far}) box.add(leaf.frame.to_world({u, v}, w));
  }
  return box;
}

double Solid::probe_offset() const {
  const Box3 b = bounds();
  if (b.empty()) return 1e-5;
  const Vec3 e = b.hi - b.lo;
  return 1e-5 * std::max({e.x, e.y, e.z});
}

}  // namespace cadkit::geom
