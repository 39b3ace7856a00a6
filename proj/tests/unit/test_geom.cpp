#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "cadkit/code/parser.hpp"
#include "cadkit/geom/sampling.hpp"
#include "cadkit/geom/solid.hpp"
#include "cadkit/metrics/metrics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace cadkit;
using namespace cadkit::geom;
using testgen::ProgramBuilder;

namespace {

double shoelace(const std::vector<Vec2>& pts) {
  double a = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) a += cross(pts[i], pts[(i + 1) % pts.size()]);
  return 0.5 * std::abs(a);
}

code::ExtrudeParams plain_extrude(code::SketchId id, code::BoolOp op = code::BoolOp::NewBody) {
  code::ExtrudeParams e;
  e.sketch = id;
  e.origin = {128, 128, 128};
  e.scale = 255;
  e.distances = {255, 128};
  e.operation = op;
  return e;
}

bool on_unit_cube_face(Vec3 p) {
  for (int k = 0; k < 3; ++k)
    if (std::abs(p[k]) <= 1e-7 || std::abs(p[k] - 1.0) <= 1e-7) return true;
  return false;
}

}  // namespace

TEST(Sketch, SquareArea) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.rect(id, 20, 30, 120, 130);
  b.extrude(plain_extrude(id));
  const Profile prof = evaluate_sketch(b.p, id);
  ASSERT_EQ(prof.loops.size(), 1u);
  EXPECT_EQ(prof.loops[0].curves.size(), 4u);
  const double side = 100.0 / 255.0;
  const std::vector<Vec2> corners{{20 / 255.0, 30 / 255.0}, {120 / 255.0, 30 / 255.0}, {120 / 255.0, 130 / 255.0},
                                  {20 / 255.0, 130 / 255.0}};
  EXPECT_NEAR(prof.area(), shoelace(corners), 1e-12);
  EXPECT_NEAR(prof.area(), side * side, 1e-12);
}

TEST(Sketch, CircleArea) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.circle(id, 128, 128, 48);
  b.extrude(plain_extrude(id));
  const Profile prof = evaluate_sketch(b.p, id);
  ASSERT_EQ(prof.loops.size(), 1u);
  ASSERT_EQ(prof.loops[0].curves.size(), 1u);
  EXPECT_EQ(prof.loops[0].curves[0].kind, Curve2::Kind::Circle);
  const double r = 48.0 / 255.0;
  EXPECT_NEAR(prof.area(), std::numbers::pi * r * r, 1e-12);
}

TEST(Sketch, TriangleHasThreeSegments) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.loop(id, code::Point2q{10, 10});
  b.line(id, 200, 10);
  b.line(id, 10, 200);
  b.line(id, 10, 10);
  b.extrude(plain_extrude(id));
  const Profile prof = evaluate_sketch(b.p, id);
  ASSERT_EQ(prof.loops.size(), 1u);
  EXPECT_EQ(prof.loops[0].curves.size(), 3u);
  EXPECT_NEAR(prof.area(), shoelace({{10 / 255.0, 10 / 255.0}, {200 / 255.0, 10 / 255.0}, {10 / 255.0, 200 / 255.0}}),
              1e-12);
}

TEST(Sketch, NearlyClosedLoopSnaps) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.loop(id, code::Point2q{10, 10});
  b.line(id, 200, 10);
  b.line(id, 200, 200);
  b.line(id, 11, 10);  // one level short of the start
  b.extrude(plain_extrude(id));
  const Profile prof = evaluate_sketch(b.p, id);
  const auto& c = prof.loops[0].curves;
  EXPECT_EQ(c.back().b, c.front().a);
}

TEST(Sketch, OpenLoopThrows) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.loop(id, code::Point2q{10, 10});
  b.line(id, 200, 10);
  b.line(id, 200, 200);
  b.extrude(plain_extrude(id));
  try {
    evaluate_sketch(b.p, id);
    FAIL();
  } catch (const GeomError& e) {
    EXPECT_EQ(e.kind(), GeomError::Kind::OpenLoop);
  }
}

TEST(Sketch, BowTieSelfIntersects) {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.loop(id, code::Point2q{10, 10});
  b.line(id, 200, 200);
  b.line(id, 200, 10);
  b.line(id, 10, 200);
  b.line(id, 10, 10);
  b.extrude(plain_extrude(id));
  try {
    evaluate_sketch(b.p, id);
    FAIL();
  } catch (const GeomError& e) {
    EXPECT_EQ(e.kind(), GeomError::Kind::SelfIntersection);
  }
}

TEST(Execute, UnitCubeMembership) {
  const Solid s = execute(testgen::unit_cube());
  EXPECT_EQ(s.contains({0.5, 0.5, 0.5}), Membership::Inside);
  EXPECT_EQ(s.contains({2, 0, 0}), Membership::Outside);
  EXPECT_EQ(s.contains({1.0, 0.5, 0.5}), Membership::Boundary);
}

TEST(Execute, UnitCubeVolume) {
  const Solid s = execute(testgen::unit_cube());
  EXPECT_NEAR(testgen::monte_carlo_volume(s, 1'000'000, -0.1, 1.1, 3), 1.0, 0.01);
}

TEST(Execute, ConvexExtrusionVolume) {
  // volume = profile area x extent
  Rng rng(21);
  for (int i = 0; i < 5; ++i) {
    ProgramBuilder b;
    const auto id = b.sketch();
    const auto r = testgen::lv(rng, 30, 100);
    b.circle(id, 128, 128, r);
    auto e = plain_extrude(id);
    e.distances = {testgen::lv(rng, 180, 255), 128};
    b.extrude(e);
    const Solid s = execute(b.p);
    const double rr = r / 255.0;
    const double h = e.distances[0] / 255.0 * 2.0 - 1.0;
    const double expect = std::numbers::pi * rr * rr * h;
    EXPECT_NEAR(testgen::monte_carlo_volume(s, 1'000'000, -0.05, 1.05, 4 + i), expect, 0.01 * expect);
  }
}

TEST(Execute, CutRemovesCenter) {
  ProgramBuilder b;
  const auto a = b.sketch();
  b.rect(a, 0, 0, 255, 255);
  b.extrude(plain_extrude(a));
  const auto c = b.sketch();
  b.rect(c, 64, 64, 192, 192);
  auto e = plain_extrude(c, code::BoolOp::Cut);
  e.extent = code::ExtentType::Symmetric;  // through the body
  b.extrude(e);
  const Solid s = execute(b.p);
  EXPECT_EQ(s.contains({0.5, 0.5, 0.5}), Membership::Outside);
  EXPECT_EQ(s.contains({0.1, 0.1, 0.5}), Membership::Inside);
}

TEST(Execute, CutEverythingIsEmpty) {
  ProgramBuilder b;
  testgen::add_box(b, {64, 64, 192, 192, 128, 200}, code::BoolOp::NewBody);
  testgen::add_box(b, {0, 0, 255, 255, 100, 255}, code::BoolOp::Cut);
  try {
    execute(b.p);
    FAIL();
  } catch (const GeomError& e) {
    EXPECT_EQ(e.kind(), GeomError::Kind::EmptyResult);
  }
}

TEST(Execute, BoxCutMatchesIntervalOracle) {
  Rng rng(22);
  for (int i = 0; i < 100; ++i) {
    const auto a = testgen::random_box(rng), b = testgen::random_box(rng);
    const auto r = testgen::check_box_cut(a, b, 300, rng);
    ASSERT_EQ(r.mismatches, 0u) << "pair " << i;
  }
}

TEST(Execute, Deterministic) {
  Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    const auto p = testgen::multi_extrusion(rng);
    EXPECT_EQ(execute(p), execute(p));
    const auto s = execute(p);
    EXPECT_EQ(sample_surface(s, 500, 9).points, sample_surface(s, 500, 9).points);
  }
}

TEST(Execute, ChamferByRectangleEqualsTriangle) {
  // a rotated rectangle whose overlap with the cuboid is the corner triangle
  auto base = [] {
    ProgramBuilder b;
    const auto id = b.sketch();
    b.rect(id, 32, 32, 223, 223);
    b.extrude(plain_extrude(id));
    return b;
  };
  auto cut = [](ProgramBuilder& b, const std::vector<code::Point2q>& pts) {
    const auto id = b.sketch();
    b.loop(id, pts[0]);
    for (std::size_t k = 1; k < pts.size(); ++k) b.line(id, pts[k].x, pts[k].y);
    b.line(id, pts[0].x, pts[0].y);
    code::ExtrudeParams e;
    e.sketch = id;
    e.origin = {128, 128, 128};
    e.scale = 255;
    e.distances = {255, 128};
    e.extent = code::ExtentType::Symmetric;
    e.operation = code::BoolOp::Cut;
    b.extrude(e);
  };
  auto tri = base();
  cut(tri, {{183, 32}, {223, 32}, {223, 72}});
  auto rect = base();
  cut(rect, {{183, 32}, {213, 2}, {253, 42}, {223, 72}});

  const Solid st = execute(tri.p), sr = execute(rect.p);
  for (const Vec3 p : {Vec3{0.85, 0.14, 0.5}, Vec3{0.86, 0.2, 0.5}, Vec3{0.5, 0.5, 0.5}, Vec3{0.8, 0.135, 0.5}})
    EXPECT_EQ(st.contains(p), sr.contains(p));
  // two independent samplings of one surface differ by ~2A/(pi n); n is large
  // enough to put that well under the threshold
  const auto ct = normalize(sample_surface(st, 100000, 1));
  const auto cr = normalize(sample_surface(sr, 100000, 2));
  EXPECT_LT(metrics::chamfer(ct, cr), 1e-4);
}

TEST(Sampling, CubePointsLieOnFaces) {
  const Solid s = execute(testgen::unit_cube());
  const auto cloud = sample_surface(s, 8096, 7);
  ASSERT_EQ(cloud.points.size(), 8096u);
  for (const auto& p : cloud.points) {
    ASSERT_TRUE(on_unit_cube_face(p));
    ASSERT_EQ(s.contains(p), Membership::Boundary);
  }
}

TEST(Sampling, BoundaryMembershipOnGeneratedSolids) {
  Rng rng(24);
  for (int i = 0; i < 20; ++i) {
    const auto p = i % 2 ? testgen::single_extrusion(rng) : testgen::multi_extrusion(rng);
    const Solid s = execute(p);
    for (const auto& q : sample_surface(s, 300, i).points) ASSERT_EQ(s.contains(q), Membership::Boundary);
  }
}

TEST(Sampling, FaceAreaRatio) {
  // x-faces have area (127/255) h, y-faces (254/255) h: ratio 2:1
  ProgramBuilder b;
  const auto id = b.sketch();
  b.rect(id, 0, 0, 254, 127);
  b.extrude(plain_extrude(id));
  const Solid s = execute(b.p);
  const auto cloud = sample_surface(s, 300000, 5);
  std::size_t xs = 0, ys = 0;
  for (const auto& p : cloud.points) {
    if (std::abs(p.x) < 1e-9 || std::abs(p.x - 254 / 255.0) < 1e-9) ++xs;
    if (std::abs(p.y) < 1e-9 || std::abs(p.y - 127 / 255.0) < 1e-9) ++ys;
  }
  EXPECT_NEAR(static_cast<double>(ys) / static_cast<double>(xs), 2.0, 0.04);
}

TEST(Sampling, SameSeedSameCloud) {
  const Solid s = execute(testgen::unit_cube());
  EXPECT_EQ(sample_surface(s, 1000, 3).points, sample_surface(s, 1000, 3).points);
  EXPECT_NE(sample_surface(s, 1000, 3).points, sample_surface(s, 1000, 4).points);
}

TEST(Normalize, CubeOfSideTwo) {
  const Solid s = execute(testgen::unit_cube());
  PointCloud c = sample_surface(s, 2000, 1);
  for (auto& p : c.points) p = p * 2.0;
  const auto n = normalize(c);
  EXPECT_TRUE(n.normalized);
  Box3 box;
  for (const auto& p : n.points) {
    box.add(p);
    for (int k = 0; k < 3; ++k) ASSERT_LE(std::abs(p[k]), 0.5 + 1e-12);
  }
  EXPECT_NEAR(box.hi.x - box.lo.x, 1.0, 1e-12);
}

TEST(Normalize, Idempotent) {
  const auto n = normalize(sample_surface(execute(testgen::unit_cube()), 2000, 1));
  const auto m = normalize(n);
  for (std::size_t i = 0; i < n.points.size(); ++i)
    for (int k = 0; k < 3; ++k) ASSERT_NEAR(n.points[i][k], m.points[i][k], 1e-12);
}

TEST(Normalize, SlabKeepsAspect) {
  PointCloud c;
  c.points = {{0, 0, 0}, {2, 1, 1}, {1, 0.5, 0.5}};
  const auto n = normalize(c);
  Box3 box;
  for (const auto& p : n.points) box.add(p);
  EXPECT_NEAR(box.hi.x - box.lo.x, 1.0, 1e-12);
  EXPECT_NEAR(box.hi.y - box.lo.y, 0.5, 1e-12);
  EXPECT_NEAR(box.hi.z - box.lo.z, 0.5, 1e-12);
}

TEST(Normalize, CoincidentPointsThrow) {
  PointCloud c;
  c.points = {{1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(normalize(c), GeomError);
}

TEST(Sampling, XyzFormat) {
  PointCloud c;
  c.points = {{0.1234567891, 1, -2}};
  std::ostringstream out;
  write_xyz(out, c);
  EXPECT_EQ(out.str(), "0.123456789 1 -2\n");
}
