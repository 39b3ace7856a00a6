#include "cadkit/geom/face.hpp"

#include <algorithm>
#include <cmath>

namespace cadkit::geom {

namespace {

// Unit normal of a curve in the sketch plane: left of travel for segments,
// radially outward for round curves.
Vec2 curve_normal(const Curve2& c, double t) {
  if (c.kind == Curve2::Kind::Segment) return perp(c.tangent_at(t));
  const Vec2 r = c.point_at(t) - c.center;
  return r * (1.0 / norm(r));
}

double side_sign(const Profile& profile, const Curve2& c) {
  const Vec2 m = c.point_at(0.5);
  const Vec2 probe = m + curve_normal(c, 0.5) * 1e-6;
  return profile.contains(probe) ? -1.0 : 1.0;
}

Vec3 lift(const Frame& f, Vec2 d) { return f.x_axis * d.x + f.y_axis * d.y; }

}  // namespace

const char* to_string(FaceKind kind) {
  switch (kind) {
    case FaceKind::PlanarCap: return "planar_cap";
    case FaceKind::PlanarSide: return "planar_side";
    case FaceKind::CylindricalSide: return "cylindrical_side";
  }
  return "?";
}

std::vector<LeafFace> leaf_faces(const Solid& solid) {
  std::vector<LeafFace> faces;
  for (std::size_t li = 0; li < solid.leaves().size(); ++li) {
    const Leaf& leaf = solid.leaves()[li];
    faces.push_back({li, FaceKind::PlanarCap, false, 0, 0, 1.0});
    faces.push_back({li, FaceKind::PlanarCap, true, 0, 0, 1.0});
    for (std::size_t k = 0; k < leaf.profile.loops.size(); ++k) {
      const auto& curves = leaf.profile.loops[k].curves;
      for (std::size_t c = 0; c < curves.size(); ++c) {
        LeafFace f;
        f.leaf = li;
        f.kind = curves[c].is_round() ? FaceKind::CylindricalSide : FaceKind::PlanarSide;
        f.loop = k;
        f.curve = c;
        f.side_sign = side_sign(leaf.profile, curves[c]);
        faces.push_back(f);
      }
    }
  }
  return faces;
}

FacePoint evaluate_face(const Solid& solid, const LeafFace& face, double u, double v) {
  const Leaf& leaf = solid.leaves()[face.leaf];
  const Frame& fr = leaf.frame;
  if (face.kind == FaceKind::PlanarCap) {
    const Box2 b = leaf.profile.bounds();
    const Vec2 uv{b.lo.x + u * (b.hi.x - b.lo.x), b.lo.y + v * (b.hi.y - b.lo.y)};
    const double w = face.top ? leaf.far : leaf.near;
    const bool on = leaf.profile.contains(uv) || fr.scale * leaf.profile.boundary_distance(uv) <= kBoundaryEps;
    return {fr.to_world(uv, w), face.top ? fr.normal : -fr.normal, on};
  }
  const Curve2& c = leaf.profile.loops[face.loop].curves[face.curve];
  const Vec2 p2 = c.point_at(u);
  const double w = leaf.near + v * (leaf.far - leaf.near);
  const Vec3 n = normalized(lift(fr, curve_normal(c, u) * face.side_sign));
  return {fr.to_world(p2, w), n, true};
}

double face_area(const Solid& solid, const LeafFace& face) {
  const Leaf& leaf = solid.leaves()[face.leaf];
  const double s = leaf.frame.scale;
  if (face.kind == FaceKind::PlanarCap) return leaf.profile.area() * s * s;
  return leaf.profile.loops[face.loop].curves[face.curve].length() * s * (leaf.far - leaf.near);
}

void face_param(const Solid& solid, const LeafFace& face, Vec3 p, double& u, double& v) {
  const Leaf& leaf = solid.leaves()[face.leaf];
  const Vec2 uv = leaf.frame.to_plane(p);
  if (face.kind == FaceKind::PlanarCap) {
    const Box2 b = leaf.profile.bounds();
    u = (uv.x - b.lo.x) / (b.hi.x - b.lo.x);
    v = (uv.y - b.lo.y) / (b.hi.y - b.lo.y);
    return;
  }
  u = leaf.profile.loops[face.loop].curves[face.curve].project(uv);
  v = (leaf.frame.height(p) - leaf.near) / (leaf.far - leaf.near);
}

Vec3 project_to_surface(const Solid& solid, const LeafFace& face, Vec3 p) {
  const Leaf& leaf = solid.leaves()[face.leaf];
  const Frame& fr = leaf.frame;
  if (face.kind == FaceKind::PlanarCap) {
    const double w = face.top ? leaf.far : leaf.near;
    return p - fr.normal * (fr.height(p) - w);
  }
  const Curve2& c = leaf.profile.loops[face.loop].curves[face.curve];
  const Vec2 uv = fr.to_plane(p);
  const double w = fr.height(p);
  if (face.kind == FaceKind::PlanarSide) {
    const Vec2 d = c.b - c.a;
    const double t = dot(uv - c.a, d) / dot(d, d);
    return fr.to_world(c.a + d * t, w);
  }
  const Vec2 r = uv - c.center;
  const double len = norm(r);
  if (len == 0.0) return fr.to_world(c.center + Vec2{c.radius, 0.0}, w);
  return fr.to_world(c.center + r * (c.radius / len), w);
}

double patch_distance(const Solid& solid, const LeafFace& face, Vec3 p) {
  const Leaf& leaf = solid.leaves()[face.leaf];
  const Frame& fr = leaf.frame;
  const Vec2 uv = fr.to_plane(p);
  const double w = fr.height(p);
  if (face.kind == FaceKind::PlanarCap) {
    const double axial = std::abs(w - (face.top ? leaf.far : leaf.near));
    const double lateral = leaf.profile.contains(uv) ? 0.0 : fr.scale * leaf.profile.boundary_distance(uv);
    return std::hypot(axial, lateral);
  }
  const Curve2& c = leaf.profile.loops[face.loop].curves[face.curve];
  const double lateral = fr.scale * c.distance(uv);
  const double axial = std::max({0.0, leaf.near - w, w - leaf.far});
  return std::hypot(axial, lateral);
}

bool survives(const Solid& solid, const LeafFace& face, const FacePoint& fp, double delta, Vec3* outward) {
  if (!fp.on_patch) return false;
  const bool out_in = solid.classify_with(fp.point + fp.normal * delta, face.leaf, Membership::Outside) ==
                      Membership::Inside;
  const bool in_in = solid.classify_with(fp.point - fp.normal * delta, face.leaf, Membership::Inside) ==
                     Membership::Inside;
  if (out_in == in_in) return false;
  if (outward) *outward = in_in ? fp.normal : -fp.normal;
  return true;
}

bool face_survives_somewhere(const Solid& solid, const LeafFace& face, int n) {
  const double delta = solid.probe_offset();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const FacePoint fp = evaluate_face(solid, face, (i + 0.5) / n, (j + 0.5) / n);
      if (survives(solid, face, fp, delta)) return true;
    }
  }
  return false;
}

}  // namespace cadkit::geom
