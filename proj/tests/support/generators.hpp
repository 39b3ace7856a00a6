#pragma once

// Random program generators shared by unit and acceptance tests.

#include <algorithm>
#include <string>
#include <vector>

#include "cadkit/code/parser.hpp"
#include "cadkit/code/program.hpp"
#include "cadkit/util/random.hpp"

namespace cadkit::testgen {

using code::Level;

inline Level lv(Rng& rng, Level lo, Level hi) { return static_cast<Level>(draw_between(rng, lo, hi)); }

struct ProgramBuilder {
  code::Program p;
  int next_sketch = 0;

  code::SketchId sketch() {
    code::SketchId id{next_sketch++};
    p.statements.push_back(code::SketchDecl{id});
    return id;
  }
  void loop(code::SketchId id, std::optional<code::Point2q> start) { p.statements.push_back(code::LoopStart{id, start}); }
  void line(code::SketchId id, Level x, Level y) { p.statements.push_back(code::Command{id, code::Line{{x, y}}}); }
  void arc(code::SketchId id, Level x, Level y, Level sweep, bool ccw) {
    p.statements.push_back(code::Command{id, code::Arc{{x, y}, sweep, ccw}});
  }
  void circle(code::SketchId id, Level cx, Level cy, Level r) {
    loop(id, std::nullopt);
    p.statements.push_back(code::Command{id, code::Circle{{cx, cy}, r}});
  }
  void rect(code::SketchId id, Level x0, Level y0, Level x1, Level y1) {
    loop(id, code::Point2q{x0, y0});
    line(id, x1, y0);
    line(id, x1, y1);
    line(id, x0, y1);
    line(id, x0, y0);
  }
  void extrude(code::ExtrudeParams e) { p.statements.push_back(code::Extrude{e}); }
};

/// Extrusion parameters with a non-zero extent.
inline code::ExtrudeParams random_extrude(Rng& rng, code::SketchId id, code::BoolOp op, bool axis_aligned) {
  code::ExtrudeParams e;
  e.sketch = id;
  if (axis_aligned) {
    static const Level quarter[] = {0, 64, 128, 192};
    e.orientation = {quarter[draw_below(rng, 4)], quarter[draw_below(rng, 4)], quarter[draw_below(rng, 4)]};
  } else {
    e.orientation = {lv(rng, 0, 255), lv(rng, 0, 255), lv(rng, 0, 255)};
  }
  e.origin = {lv(rng, 90, 166), lv(rng, 90, 166), lv(rng, 90, 166)};
  e.scale = lv(rng, 80, 255);
  e.operation = op;
  e.extent = static_cast<code::ExtentType>(draw_below(rng, 3));
  // distance level 128 is +1/255, never zero; keep extents clearly non-zero
  auto far_from_zero = [&] { return draw_below(rng, 2) ? lv(rng, 150, 255) : lv(rng, 0, 105); };
  e.distances = {far_from_zero(), far_from_zero()};
  if (e.extent == code::ExtentType::TwoSided) {
    // e1 on the positive side, e2 extends backwards
    e.distances = {lv(rng, 150, 255), lv(rng, 150, 255)};
  }
  return e;
}

/// Closed, simple profile inside [16, 239]^2.
inline void random_profile(ProgramBuilder& b, code::SketchId id, Rng& rng) {
  switch (draw_below(rng, 4)) {
    case 0: {
      const Level x0 = lv(rng, 16, 100), y0 = lv(rng, 16, 100);
      b.rect(id, x0, y0, lv(rng, x0 + 30, 239), lv(rng, y0 + 30, 239));
      break;
    }
    case 1: {
      const Level r = lv(rng, 15, 100);
      b.circle(id, lv(rng, 16 + r, 239 - r), lv(rng, 16 + r, 239 - r), r);
      break;
    }
    case 2: {
      // D shape: three lines and a half-circle bulging right
      const Level x0 = lv(rng, 16, 90), y0 = lv(rng, 16, 90);
      const Level h = 2 * lv(rng, 15, 60);
      const Level x1 = lv(rng, x0 + 20, std::min(239 - h / 2, 200));
      b.loop(id, code::Point2q{x0, y0});
      b.line(id, x1, y0);
      b.arc(id, x1, y0 + h, 128, true);
      b.line(id, x0, y0 + h);
      b.line(id, x0, y0);
      break;
    }
    default: {
      // rectangle with a circular hole
      const Level x0 = lv(rng, 16, 60), y0 = lv(rng, 16, 60);
      const Level x1 = lv(rng, x0 + 80, 239), y1 = lv(rng, y0 + 80, 239);
      b.rect(id, x0, y0, x1, y1);
      const Level r = lv(rng, 8, std::min(x1 - x0, y1 - y0) / 2 - 10);
      b.circle(id, (x0 + x1) / 2, (y0 + y1) / 2, r);
      break;
    }
  }
}

/// One sketch, one NewBody extrusion.
inline code::Program single_extrusion(Rng& rng, bool axis_aligned = false) {
  ProgramBuilder b;
  const auto id = b.sketch();
  random_profile(b, id, rng);
  b.extrude(random_extrude(rng, id, code::BoolOp::NewBody, axis_aligned));
  return b.p;
}

/// Axis-aligned box [x0,x1]x[y0,y1] extruded one-sided along +z.
inline code::Program box(Level x0, Level y0, Level x1, Level y1, Level e1) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.rect(id, x0, y0, x1, y1);
  code::ExtrudeParams e;
  e.sketch = id;
  e.origin = {128, 128, 128};
  e.scale = 255;
  e.distances = {e1, 128};
  b.extrude(e);
  return b.p;
}

/// Unit cube [0,1]^3.
inline code::Program unit_cube() { return box(0, 0, 255, 255, 255); }

/// Axis-aligned box given in levels: x, y from the profile (scale 1, origin
/// x = y = 0), z from origin level oz and one-sided extent level e1.
struct BoxSpec {
  Level x0 = 0, y0 = 0, x1 = 255, y1 = 255, oz = 128, e1 = 255;

  double lo(int axis) const {
    if (axis == 0) return x0 / 255.0;
    if (axis == 1) return y0 / 255.0;
    return oz / 128.0 - 1.0;
  }
  double hi(int axis) const {
    if (axis == 0) return x1 / 255.0;
    if (axis == 1) return y1 / 255.0;
    return lo(2) + (e1 / 255.0 * 2.0 - 1.0);
  }
};

inline void add_box(ProgramBuilder& b, const BoxSpec& s, code::BoolOp op) {
  const auto id = b.sketch();
  b.rect(id, s.x0, s.y0, s.x1, s.y1);
  code::ExtrudeParams e;
  e.sketch = id;
  e.origin = {128, 128, s.oz};
  e.scale = 255;
  e.distances = {s.e1, 128};
  e.operation = op;
  b.extrude(e);
}

inline BoxSpec random_box(Rng& rng) {
  BoxSpec s;
  s.x0 = lv(rng, 0, 200);
  s.x1 = lv(rng, s.x0 + 20, 255);
  s.y0 = lv(rng, 0, 200);
  s.y1 = lv(rng, s.y0 + 20, 255);
  s.oz = lv(rng, 100, 156);
  s.e1 = lv(rng, 150, 255);
  return s;
}

/// Two to three bodies: a NewBody, then Joins and at most one narrow Cut.
/// The Cut is a cylinder thinner than any profile of random_profile, so it
/// can never remove the whole first body.
inline code::Program multi_extrusion(Rng& rng) {
  ProgramBuilder b;
  const auto first = b.sketch();
  random_profile(b, first, rng);
  const auto base = random_extrude(rng, first, code::BoolOp::NewBody, true);
  b.extrude(base);
  const int extra = static_cast<int>(draw_between(rng, 1, 2));
  bool cut_used = false;
  for (int k = 0; k < extra; ++k) {
    const auto id = b.sketch();
    if (!cut_used && draw_below(rng, 2)) {
      cut_used = true;
      const Level r = lv(rng, 2, 4);
      b.circle(id, lv(rng, 40, 215), lv(rng, 40, 215), r);
      auto e = random_extrude(rng, id, code::BoolOp::Cut, true);
      e.scale = std::min(e.scale, base.scale);
      b.extrude(e);
    } else {
      random_profile(b, id, rng);
      b.extrude(random_extrude(rng, id, code::BoolOp::Join, true));
    }
  }
  return b.p;
}

/// Structurally well-formed program with arbitrary levels; it parses but need
/// not describe a valid solid.
inline code::Program syntactic_program(Rng& rng) {
  ProgramBuilder b;
  const int sketches = static_cast<int>(draw_between(rng, 1, 4));
  for (int s = 0; s < sketches; ++s) {
    const auto id = b.sketch();
    const int loops = static_cast<int>(draw_between(rng, 1, 3));
    for (int l = 0; l < loops; ++l) {
      if (draw_below(rng, 4) == 0) {
        b.circle(id, lv(rng, 0, 255), lv(rng, 0, 255), lv(rng, 0, 255));
        continue;
      }
      b.loop(id, code::Point2q{lv(rng, 0, 255), lv(rng, 0, 255)});
      const int n = static_cast<int>(draw_between(rng, 1, 6));
      for (int c = 0; c < n; ++c) {
        if (draw_below(rng, 3) == 0)
          b.arc(id, lv(rng, 0, 255), lv(rng, 0, 255), lv(rng, 1, 255), draw_below(rng, 2) == 0);
        else
          b.line(id, lv(rng, 0, 255), lv(rng, 0, 255));
      }
    }
    code::ExtrudeParams e;
    e.sketch = id;
    e.orientation = {lv(rng, 0, 255), lv(rng, 0, 255), lv(rng, 0, 255)};
    e.origin = {lv(rng, 0, 255), lv(rng, 0, 255), lv(rng, 0, 255)};
    e.scale = lv(rng, 0, 255);
    e.distances = {lv(rng, 0, 255), lv(rng, 0, 255)};
    e.operation = static_cast<code::BoolOp>(draw_below(rng, 4));
    e.extent = static_cast<code::ExtentType>(draw_below(rng, 3));
    b.extrude(e);
  }
  return b.p;
}

}  // namespace cadkit::testgen
