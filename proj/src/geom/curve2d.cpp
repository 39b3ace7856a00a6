#include "cadkit/geom/curve2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cadkit/code/quantize.hpp"

namespace cadkit::geom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTau = 2.0 * kPi;
constexpr double kParamTol = 1e-9;
constexpr double kSharedTol = 1e-7;

double wrap_angle(double a) {
  a = std::fmod(a, kTau);
  if (a < 0) a += kTau;
  return a;
}

Vec2 dequantize(code::Point2q p) { return {code::kCoordRange.dequantize(p.x), code::kCoordRange.dequantize(p.y)}; }

std::string fmt(code::Point2q p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

// Counter-clockwise angular interval covered by a round curve.
std::pair<double, double> ccw_interval(const Curve2& c) {
  const double lo = c.sweep > 0 ? c.start_angle : c.start_angle + c.sweep;
  const double s = wrap_angle(lo);
  return {s, s + std::abs(c.sweep)};
}

double circular_overlap(const Curve2& c1, const Curve2& c2) {
  auto [s1, e1] = ccw_interval(c1);
  auto [s2, e2] = ccw_interval(c2);
  double total = 0.0;
  for (int k = -1; k <= 1; ++k) {
    const double lo = std::max(s1, s2 + k * kTau);
    const double hi = std::min(e1, e2 + k * kTau);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

CurveHits segment_segment(const Curve2& s1, const Curve2& s2) {
  CurveHits hits;
  const Vec2 d = s1.b - s1.a;
  const Vec2 e = s2.b - s2.a;
  const Vec2 w = s2.a - s1.a;
  const double den = cross(d, e);
  const double ld = norm(d);
  const double le = norm(e);
  if (std::abs(den) > 1e-12 * ld * le) {
    const double t = cross(w, e) / den;
    const double s = cross(w, d) / den;
    if (t >= -kParamTol && t <= 1 + kParamTol && s >= -kParamTol && s <= 1 + kParamTol)
      hits.points.push_back(s1.a + d * std::clamp(t, 0.0, 1.0));
    return hits;
  }
  if (std::abs(cross(w, d)) / ld > 1e-9) return hits;  // parallel, apart
  const double t0 = dot(s2.a - s1.a, d) / (ld * ld);
  const double t1 = dot(s2.b - s1.a, d) / (ld * ld);
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  if ((hi - lo) * ld > 1e-9)
    hits.overlap = true;
  else if (hi - lo >= -kParamTol)
    hits.points.push_back(s1.a + d * std::clamp(lo, 0.0, 1.0));
  return hits;
}

CurveHits segment_round(const Curve2& s, const Curve2& c) {
  CurveHits hits;
  const Vec2 d = s.b - s.a;
  const Vec2 f = s.a - c.center;
  const double len2 = dot(d, d);
  const double len = std::sqrt(len2);
  const double h = std::abs(cross(d, f)) / len;
  if (h > c.radius + 1e-9) return hits;
  const double foot = -dot(f, d) / len2;
  const double half = std::sqrt(std::max(0.0, c.radius * c.radius - h * h)) / len;
  std::vector<double> ts{foot - half};
  if (half > 1e-12) ts.push_back(foot + half);
  for (double t : ts) {
    if (t < -kParamTol || t > 1 + kParamTol) continue;
    const Vec2 q = s.a + d * std::clamp(t, 0.0, 1.0);
    if (c.angle_on_arc(q, 1e-9)) hits.points.push_back(q);
  }
  return hits;
}

CurveHits round_round(const Curve2& c1, const Curve2& c2) {
  CurveHits hits;
  const Vec2 d = c2.center - c1.center;
  const double dist = norm(d);
  if (dist < 1e-12) {
    if (std::abs(c1.radius - c2.radius) > 1e-12) return hits;
    if (circular_overlap(c1, c2) * c1.radius > 1e-9) {
      hits.overlap = true;
      return hits;
    }
    for (Vec2 p : {c2.a, c2.b})
      if (c1.angle_on_arc(p, 1e-9)) hits.points.push_back(p);
    for (Vec2 p : {c1.a, c1.b})
      if (c2.angle_on_arc(p, 1e-9)) hits.points.push_back(p);
    return hits;
  }
  const double r1 = c1.radius, r2 = c2.radius;
  if (dist > r1 + r2 + 1e-9 || dist < std::abs(r1 - r2) - 1e-9) return hits;
  const double along = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist);
  const double h = std::sqrt(std::max(0.0, r1 * r1 - along * along));
  const Vec2 u = d * (1.0 / dist);
  const Vec2 base = c1.center + u * along;
  std::vector<Vec2> cand{base + perp(u) * h};
  if (h > 1e-12) cand.push_back(base - perp(u) * h);
  for (Vec2 q : cand)
    if (c1.angle_on_arc(q, 1e-9) && c2.angle_on_arc(q, 1e-9)) hits.points.push_back(q);
  return hits;
}

bool boxes_touch(const Box2& a, const Box2& b) {
  constexpr double m = 1e-9;
  return a.lo.x <= b.hi.x + m && b.lo.x <= a.hi.x + m && a.lo.y <= b.hi.y + m && b.lo.y <= a.hi.y + m;
}

// Crossings of the ray from p towards +x, half-open in y.
int crossings(const Curve2& c, Vec2 p) {
  auto crosses = [&](Vec2 u, Vec2 v) { return (u.y > p.y) != (v.y > p.y); };
  if (c.kind == Curve2::Kind::Segment) {
    if (!crosses(c.a, c.b)) return 0;
    const double x = c.a.x + (p.y - c.a.y) * (c.b.x - c.a.x) / (c.b.y - c.a.y);
    return x > p.x ? 1 : 0;
  }
  auto round_x = [&](double side) {
    const double dy = p.y - c.center.y;
    return c.center.x + side * std::sqrt(std::max(0.0, c.radius * c.radius - dy * dy));
  };
  if (c.kind == Curve2::Kind::Circle) {
    const Vec2 bottom{c.center.x, c.center.y - c.radius};
    const Vec2 top{c.center.x, c.center.y + c.radius};
    if (!crosses(bottom, top)) return 0;
    return (round_x(1.0) > p.x ? 1 : 0) + (round_x(-1.0) > p.x ? 1 : 0);
  }
  // Split the arc at its y extremes so every piece is monotone in y.
  const double th_lo = std::min(c.start_angle, c.start_angle + c.sweep);
  const double th_hi = std::max(c.start_angle, c.start_angle + c.sweep);
  std::vector<double> ts{0.0};
  for (double k = std::ceil((th_lo - kPi / 2) / kPi); k * kPi + kPi / 2 <= th_hi; k += 1.0) {
    const double t = (k * kPi + kPi / 2 - c.start_angle) / c.sweep;
    if (t > 1e-12 && t < 1 - 1e-12) ts.push_back(t);
  }
  std::sort(ts.begin() + 1, ts.end());
  ts.push_back(1.0);
  auto at = [&](double t) {
    if (t == 0.0) return c.a;
    if (t == 1.0) return c.b;
    const double th = c.start_angle + t * c.sweep;
    // Breakpoints sit exactly at the top or bottom of the circle.
    return Vec2{c.center.x, c.center.y + (std::sin(th) > 0 ? c.radius : -c.radius)};
  };
  int n = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const Vec2 u = at(ts[i]);
    const Vec2 v = at(ts[i + 1]);
    if (!crosses(u, v)) continue;
    const double mid = c.start_angle + 0.5 * (ts[i] + ts[i + 1]) * c.sweep;
    if (round_x(std::cos(mid) >= 0 ? 1.0 : -1.0) > p.x) ++n;
  }
  return n;
}

int loop_crossings(const Loop2& loop, Vec2 p) {
  int n = 0;
  for (const auto& c : loop.curves) n += crossings(c, p);
  return n;
}

std::vector<double> loop_key(const Loop2& loop) {
  std::vector<double> key;
  for (const auto& c : loop.curves) {
    key.insert(key.end(), {static_cast<double>(c.kind), c.a.x, c.a.y, c.b.x, c.b.y, c.center.x, c.center.y,
                           c.radius, c.sweep});
  }
  return key;
}

}  // namespace

const char* to_string(GeomError::Kind kind) {
  switch (kind) {
    case GeomError::Kind::OpenLoop: return "open-loop";
    case GeomError::Kind::DegenerateLoop: return "degenerate-profile";
    case GeomError::Kind::SelfIntersection: return "self-intersection";
    case GeomError::Kind::LoopCrossing: return "loop-crossing";
    case GeomError::Kind::MalformedLoop: return "malformed-loop";
    case GeomError::Kind::ZeroExtent: return "zero-extent";
    case GeomError::Kind::DegenerateExtrude: return "degenerate-extrude";
    case GeomError::Kind::MissingSketch: return "missing-sketch";
    case GeomError::Kind::EmptyResult: return "empty-result";
    case GeomError::Kind::SamplingExhausted: return "sampling-exhausted";
  }
  return "?";
}

Curve2 Curve2::segment(Vec2 a, Vec2 b) {
  Curve2 c;
  c.kind = Kind::Segment;
  c.a = a;
  c.b = b;
  return c;
}

Curve2 Curve2::arc(Vec2 a, Vec2 b, double sweep, bool ccw) {
  Curve2 c;
  c.kind = Kind::Arc;
  c.a = a;
  c.b = b;
  const Vec2 d = b - a;
  const double chord = norm(d);
  c.radius = chord / (2.0 * std::sin(sweep / 2.0));
  const Vec2 left = perp(d) * (1.0 / chord);
  const double offset = (chord / 2.0) / std::tan(sweep / 2.0);
  c.center = (a + b) * 0.5 + left * (ccw ? offset : -offset);
  c.start_angle = std::atan2(a.y - c.center.y, a.x - c.center.x);
  c.sweep = ccw ? sweep : -sweep;
  return c;
}

Curve2 Curve2::circle(Vec2 center, double radius) {
  Curve2 c;
  c.kind = Kind::Circle;
  c.center = center;
  c.radius = radius;
  c.a = c.b = center + Vec2{radius, 0.0};
  c.start_angle = 0.0;
  c.sweep = kTau;
  return c;
}

Vec2 Curve2::point_at(double t) const {
  if (kind == Kind::Segment) return a + (b - a) * t;
  if (kind == Kind::Arc) {
    if (t <= 0.0) return a;
    if (t >= 1.0) return b;
  }
  const double th = start_angle + t * sweep;
  return center + Vec2{std::cos(th), std::sin(th)} * radius;
}

Vec2 Curve2::tangent_at(double t) const {
  if (kind == Kind::Segment) return (b - a) * (1.0 / norm(b - a));
  const double th = start_angle + t * sweep;
  const Vec2 dir{-std::sin(th), std::cos(th)};
  return sweep > 0 ? dir : -dir;
}

double Curve2::length() const { return kind == Kind::Segment ? norm(b - a) : radius * std::abs(sweep); }

double Curve2::project(Vec2 p) const {
  if (kind == Kind::Segment) {
    const Vec2 d = b - a;
    return std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  }
  const double phi = std::atan2(p.y - center.y, p.x - center.x);
  const double off = sweep > 0 ? wrap_angle(phi - start_angle) : wrap_angle(start_angle - phi);
  const double span = std::abs(sweep);
  if (off <= span) return off / span;
  if (kind == Kind::Circle) return 0.0;
  return norm(p - a) <= norm(p - b) ? 0.0 : 1.0;
}

double Curve2::distance(Vec2 p) const {
  if (kind != Kind::Segment && angle_on_arc(p)) return std::abs(norm(p - center) - radius);
  return norm(p - point_at(project(p)));
}

double Curve2::area_term() const {
  if (kind == Kind::Segment) return 0.5 * cross(a, b);
  const double t0 = start_angle;
  const double t1 = start_angle + sweep;
  return 0.5 * (radius * center.x * (std::sin(t1) - std::sin(t0)) -
                radius * center.y * (std::cos(t1) - std::cos(t0)) + radius * radius * sweep);
}

Box2 Curve2::bounds() const {
  Box2 box;
  if (kind == Kind::Circle) {
    box.add(center - Vec2{radius, radius});
    box.add(center + Vec2{radius, radius});
    return box;
  }
  box.add(a);
  box.add(b);
  if (kind == Kind::Arc) {
    for (int k = 0; k < 4; ++k) {
      const double th = k * kPi / 2;
      const Vec2 q = center + Vec2{std::cos(th), std::sin(th)} * radius;
      if (angle_on_arc(q, 0.0)) box.add(q);
    }
  }
  return box;
}

bool Curve2::angle_on_arc(Vec2 p, double tol) const {
  if (kind == Kind::Circle) return true;
  const double phi = std::atan2(p.y - center.y, p.x - center.x);
  const double off = sweep > 0 ? wrap_angle(phi - start_angle) : wrap_angle(start_angle - phi);
  return off <= std::abs(sweep) + tol || off >= kTau - tol;
}

CurveHits intersect(const Curve2& c1, const Curve2& c2) {
  if (!boxes_touch(c1.bounds(), c2.bounds())) return {};
  const bool r1 = c1.is_round();
  const bool r2 = c2.is_round();
  if (!r1 && !r2) return segment_segment(c1, c2);
  if (!r1) return segment_round(c1, c2);
  if (!r2) return segment_round(c2, c1);
  return round_round(c1, c2);
}

Box2 Loop2::bounds() const {
  Box2 box;
  for (const auto& c : curves) box.add(c.bounds());
  return box;
}

Loop2 build_loop(const code::LoopView& view) {
  using Kind = GeomError::Kind;
  if (view.commands.empty()) throw GeomError(Kind::MalformedLoop, "loop has no commands");

  Loop2 loop;
  const bool has_circle = std::any_of(view.commands.begin(), view.commands.end(),
                                      [](const auto& g) { return std::holds_alternative<code::Circle>(g); });
  if (has_circle) {
    if (view.commands.size() != 1)
      throw GeomError(Kind::MalformedLoop, "a circle must be the only command of its loop");
    if (view.start) throw GeomError(Kind::MalformedLoop, "a circle loop takes no start point");
    const auto& circ = std::get<code::Circle>(view.commands.front());
    if (circ.radius == 0) throw GeomError(Kind::DegenerateLoop, "circle has zero radius");
    loop.curves.push_back(Curve2::circle(dequantize(circ.center), code::kRadiusRange.dequantize(circ.radius)));
  } else {
    if (!view.start) throw GeomError(Kind::MalformedLoop, "loop of lines and arcs needs a start point");
    const code::Point2q start = *view.start;
    auto endpoint = [](const code::GeomCommand& g) {
      if (const auto* l = std::get_if<code::Line>(&g)) return l->endpoint;
      return std::get<code::Arc>(g).endpoint;
    };
    code::Point2q last = endpoint(view.commands.back());
    if (last != start) {
      const int gap = std::max(std::abs(last.x - start.x), std::abs(last.y - start.y));
      if (gap > 1)
        throw GeomError(Kind::OpenLoop, "loop ends at " + fmt(last) + ", " + std::to_string(gap) +
                                            " levels away from its start " + fmt(start));
    }
    code::Point2q prev = start;
    for (std::size_t i = 0; i < view.commands.size(); ++i) {
      const auto& g = view.commands[i];
      const code::Point2q cur = i + 1 == view.commands.size() ? start : endpoint(g);
      if (cur == prev)
        throw GeomError(Kind::DegenerateLoop, "curve " + std::to_string(i) + " has zero length at " + fmt(cur));
      if (const auto* arc = std::get_if<code::Arc>(&g)) {
        if (arc->sweep == 0) throw GeomError(Kind::DegenerateLoop, "arc " + std::to_string(i) + " has zero sweep");
        loop.curves.push_back(
            Curve2::arc(dequantize(prev), dequantize(cur), code::kAngleRange.dequantize(arc->sweep), arc->ccw));
      } else {
        loop.curves.push_back(Curve2::segment(dequantize(prev), dequantize(cur)));
      }
      prev = cur;
    }
  }

  const std::size_t n = loop.curves.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const CurveHits hits = intersect(loop.curves[i], loop.curves[j]);
      if (hits.overlap)
        throw GeomError(Kind::SelfIntersection,
                        "curves " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      std::vector<Vec2> shared;
      if (j == i + 1) shared.push_back(loop.curves[i].b);
      if (i == 0 && j == n - 1) shared.push_back(loop.curves[0].a);
      for (Vec2 p : hits.points) {
        const bool at_joint =
            std::any_of(shared.begin(), shared.end(), [&](Vec2 s) { return norm(p - s) < kSharedTol; });
        if (!at_joint)
          throw GeomError(Kind::SelfIntersection,
                          "curves " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
      }
    }
  }
  // after the crossing test: a bow tie can have zero net area
  for (const auto& c : loop.curves) loop.signed_area += c.area_term();
  if (std::abs(loop.signed_area) < 1e-12) throw GeomError(Kind::DegenerateLoop, "loop encloses no area");
  return loop;
}

bool Profile::contains(Vec2 p) const {
  int n = 0;
  for (const auto& loop : loops) n += loop_crossings(loop, p);
  return n % 2 == 1;
}

double Profile::boundary_distance(Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& loop : loops)
    for (const auto& c : loop.curves) best = std::min(best, c.distance(p));
  return best;
}

double Profile::area() const {
  double a = 0.0;
  for (const auto& loop : loops) a += loop.hole ? -loop.area() : loop.area();
  return a;
}

Box2 Profile::bounds() const {
  Box2 box;
  for (const auto& loop : loops) box.add(loop.bounds());
  return box;
}

Profile build_profile(std::vector<Loop2> loops) {
  for (std::size_t i = 0; i < loops.size(); ++i) {
    for (std::size_t j = i + 1; j < loops.size(); ++j) {
      if (!boxes_touch(loops[i].bounds(), loops[j].bounds())) continue;
      for (const auto& ci : loops[i].curves) {
        for (const auto& cj : loops[j].curves) {
          const CurveHits hits = intersect(ci, cj);
          if (hits.overlap || !hits.points.empty())
            throw GeomError(GeomError::Kind::LoopCrossing,
                            "loops " + std::to_string(i) + " and " + std::to_string(j) + " touch or cross");
        }
      }
    }
  }
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const Vec2 probe = loops[i].curves.front().point_at(0.5);
    int depth = 0;
    for (std::size_t j = 0; j < loops.size(); ++j)
      if (j != i && loop_crossings(loops[j], probe) % 2 == 1) ++depth;
    loops[i].hole = depth % 2 == 1;
  }
  std::sort(loops.begin(), loops.end(), [](const Loop2& l, const Loop2& r) { return loop_key(l) < loop_key(r); });
  return Profile{std::move(loops)};
}

}  // namespace cadkit::geom
