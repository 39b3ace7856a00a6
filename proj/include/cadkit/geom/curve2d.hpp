#pragma once

#include <cstddef>
#include <vector>

#include "cadkit/code/program.hpp"
#include "cadkit/geom/error.hpp"
#include "cadkit/geom/vec.hpp"

namespace cadkit::geom {

/// A planar curve in sketch coordinates: a segment, a circular arc or a full
/// circle (counter-clockwise, starting at angle 0).
struct Curve2 {
  enum class Kind { Segment, Arc, Circle };

  Kind kind = Kind::Segment;
  Vec2 a;  // start point
  Vec2 b;  // end point
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;  // signed; positive is counter-clockwise

  static Curve2 segment(Vec2 a, Vec2 b);
  static Curve2 arc(Vec2 a, Vec2 b, double sweep, bool ccw);
  static Curve2 circle(Vec2 center, double radius);

  bool is_round() const { return kind != Kind::Segment; }
  Vec2 point_at(double t) const;
  /// Unit tangent in the direction of travel.
  Vec2 tangent_at(double t) const;
  double length() const;
  double distance(Vec2 p) const;
  /// Closest parameter in [0, 1].
  double project(Vec2 p) const;
  /// This curve's share of the signed loop area (1/2 of x dy - y dx).
  double area_term() const;
  Box2 bounds() const;
  /// True when the angle of p around the center lies on the arc.
  bool angle_on_arc(Vec2 p, double tol = 1e-12) const;

  bool operator==(const Curve2&) const = default;
};

/// Intersections between two curves. `overlap` is set when the curves share
/// a stretch of positive length.
struct CurveHits {
  std::vector<Vec2> points;
  bool overlap = false;
};
CurveHits intersect(const Curve2& c1, const Curve2& c2);

struct Loop2 {
  std::vector<Curve2> curves;
  double signed_area = 0.0;
  bool hole = false;

  double area() const { return std::abs(signed_area); }
  Box2 bounds() const;
  bool operator==(const Loop2&) const = default;
};

/// Builds the loop described by a program loop. Coordinates are dequantized
/// to the unit square; an endpoint within one level of the start closes the
/// loop onto it.
Loop2 build_loop(const code::LoopView& loop);

/// A sketch profile: one or more non-crossing loops, filled with the even-odd
/// rule. Loops are kept in a canonical order so the result does not depend on
/// the order they were written in.
struct Profile {
  std::vector<Loop2> loops;

  /// Even-odd inclusion; points exactly on a curve may go either way.
  bool contains(Vec2 p) const;
  double boundary_distance(Vec2 p) const;
  double area() const;
  Box2 bounds() const;
  bool operator==(const Profile&) const = default;
};

Profile build_profile(std::vector<Loop2> loops);

}  // namespace cadkit::geom
