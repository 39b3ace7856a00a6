#include <gtest/gtest.h>

#include <cstring>

#include "cadkit/graph/archive.hpp"
#include "cadkit/graph/face_graph.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace cadkit;
using namespace cadkit::graph;
using geom::Vec3;
using testgen::ProgramBuilder;

namespace {

code::ExtrudeParams plain_extrude(code::SketchId id, code::BoolOp op = code::BoolOp::NewBody) {
  code::ExtrudeParams e;
  e.sketch = id;
  e.origin = {128, 128, 128};
  e.scale = 255;
  e.distances = {255, 128};
  e.operation = op;
  return e;
}

geom::Solid cylinder() {
  ProgramBuilder b;
  const auto id = b.sketch();
  b.circle(id, 128, 128, 48);
  b.extrude(plain_extrude(id));
  return geom::execute(b.p);
}

geom::Solid cube() { return geom::execute(testgen::unit_cube()); }

Vec3 grid_point(const FaceGraph& g, std::size_t node, int i, int j, int channel) {
  const int r = g.resolution;
  const std::size_t base = ((node * r + i) * r + j) * kNodeChannels + channel;
  return {g.node_grids[base], g.node_grids[base + 1], g.node_grids[base + 2]};
}

double grid_mask(const FaceGraph& g, std::size_t node, int i, int j) {
  const int r = g.resolution;
  return g.node_grids[((node * r + i) * r + j) * kNodeChannels + 6];
}

}  // namespace

TEST(Faces, CubeHasSix) { EXPECT_EQ(enumerate_faces(cube()).size(), 6u); }

TEST(Faces, CylinderHasThree) { EXPECT_EQ(enumerate_faces(cylinder()).size(), 3u); }

TEST(Faces, CubeWithThroughHoleHasSeven) {
  ProgramBuilder b;
  const auto a = b.sketch();
  b.rect(a, 0, 0, 255, 255);
  b.extrude(plain_extrude(a));
  const auto h = b.sketch();
  b.circle(h, 128, 128, 40);
  auto e = plain_extrude(h, code::BoolOp::Cut);
  e.extent = code::ExtentType::Symmetric;
  b.extrude(e);
  const auto faces = enumerate_faces(geom::execute(b.p));
  EXPECT_EQ(faces.size(), 7u);
}

TEST(Adjacency, Cube) {
  const auto g = adjacency_graph(cube());
  EXPECT_EQ(g.node_count(), 6u);
  EXPECT_EQ(g.edges.size(), 12u);
  EXPECT_TRUE(is_connected(g));
}

TEST(Adjacency, Cylinder) {
  const auto g = adjacency_graph(cylinder());
  ASSERT_EQ(g.node_count(), 3u);
  ASSERT_EQ(g.edges.size(), 2u);
  // bottom cap, top cap, then the side
  EXPECT_EQ(g.faces[2].kind, geom::FaceKind::CylindricalSide);
  EXPECT_EQ(g.edges[0], (std::array<std::size_t, 2>{0, 2}));
  EXPECT_EQ(g.edges[1], (std::array<std::size_t, 2>{1, 2}));
}

TEST(Adjacency, GeneratedSolidsConnected) {
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    const auto p = testgen::single_extrusion(rng);
    const auto g = adjacency_graph(geom::execute(p));
    ASSERT_TRUE(testgen::bfs_connected(g.node_count(), g.edges)) << code::serialize(p);
    for (const auto& e : g.edges) ASSERT_LT(e[0], e[1]);
  }
}

TEST(Adjacency, RigidMotionInvariant) {
  Rng rng(32);
  for (int i = 0; i < 10; ++i) {
    const auto s = geom::execute(testgen::single_extrusion(rng));
    geom::RigidTransform xf;
    const double a = 0.3 + i, c = std::cos(a), sn = std::sin(a);
    xf.c0 = {c, sn, 0};
    xf.c1 = {-sn, c, 0};
    xf.t = {0.3, -1.0, 2.0};
    const auto g1 = adjacency_graph(s), g2 = adjacency_graph(s.transformed(xf));
    EXPECT_EQ(g1.node_count(), g2.node_count());
    EXPECT_EQ(g1.edges, g2.edges);
  }
}

TEST(Grids, PlanarFaceIsFlat) {
  const auto g = build_face_graph(cube(), 10);
  // node 0 is the bottom cap z = 0
  const Vec3 n0 = grid_point(g, 0, 0, 0, 3);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      EXPECT_NEAR(grid_point(g, 0, i, j, 0).z, 0.0, 1e-12);
      EXPECT_EQ(grid_point(g, 0, i, j, 3), n0);
      EXPECT_EQ(grid_mask(g, 0, i, j), 1.0);
    }
  EXPECT_NEAR(std::abs(n0.z), 1.0, 1e-12);
}

TEST(Grids, CylinderNormalsRadial) {
  const auto g = build_face_graph(cylinder(), 10);
  const double cx = 128 / 255.0, cy = 128 / 255.0, r = 48 / 255.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const Vec3 p = grid_point(g, 2, i, j, 0), n = grid_point(g, 2, i, j, 3);
      const Vec3 expect{(p.x - cx) / r, (p.y - cy) / r, 0.0};
      EXPECT_NEAR(geom::norm(n), 1.0, 1e-9);
      EXPECT_NEAR(n.x, expect.x, 1e-9);
      EXPECT_NEAR(n.y, expect.y, 1e-9);
      EXPECT_NEAR(n.z, 0.0, 1e-9);
    }
}

TEST(Grids, TrimmedFaceHasZeros) {
  ProgramBuilder b;
  const auto a = b.sketch();
  b.rect(a, 0, 0, 255, 255);
  b.extrude(plain_extrude(a));
  const auto h = b.sketch();
  b.circle(h, 128, 128, 60);
  auto e = plain_extrude(h, code::BoolOp::Cut);
  e.extent = code::ExtentType::Symmetric;
  b.extrude(e);
  const auto g = build_face_graph(geom::execute(b.p), 10);
  std::size_t zeros = 0, ones = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) (grid_mask(g, 0, i, j) == 0.0 ? zeros : ones)++;
  EXPECT_GT(zeros, 0u);
  EXPECT_GT(ones, 0u);
  for (std::size_t n = 0; n < g.node_count(); ++n)
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const double m = grid_mask(g, n, i, j);
        ASSERT_TRUE(m == 0.0 || m == 1.0);
        if (m == 1.0) ASSERT_NEAR(geom::norm(grid_point(g, n, i, j, 3)), 1.0, 1e-9);
      }
}

TEST(Grids, EdgePointsOnBothFaces) {
  Rng rng(33);
  for (int t = 0; t < 10; ++t) {
    const auto g = build_face_graph(geom::execute(testgen::single_extrusion(rng)), 10);
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      for (int k = 0; k < 10; ++k) {
        const std::size_t base = (e * 10 + k) * kEdgeChannels;
        const Vec3 p{g.edge_grids[base], g.edge_grids[base + 1], g.edge_grids[base + 2]};
        const Vec3 tan{g.edge_grids[base + 3], g.edge_grids[base + 4], g.edge_grids[base + 5]};
        EXPECT_NEAR(geom::norm(tan), 1.0, 1e-9);
        EXPECT_LT(geom::patch_distance(g.solid, g.faces[g.edges[e][0]], p), 1e-7);
        EXPECT_LT(geom::patch_distance(g.solid, g.faces[g.edges[e][1]], p), 1e-7);
      }
  }
}

TEST(Export, CubeShapes) {
  const auto a = to_archive(build_face_graph(cube(), 10));
  EXPECT_EQ(a.at("node_grids").shape, (std::vector<std::size_t>{6, 10, 10, 7}));
  EXPECT_EQ(a.at("edge_index").shape, (std::vector<std::size_t>{12, 2}));
  EXPECT_EQ(a.at("edge_grids").shape, (std::vector<std::size_t>{12, 10, 6}));
  EXPECT_EQ(a.at("node_grids").dtype, DType::F32);
}

TEST(Export, CylinderEdgeList) {
  const auto a = to_archive(build_face_graph(cylinder(), 10));
  EXPECT_EQ(a.at("edge_index").data, (std::vector<double>{0, 2, 1, 2}));
}

TEST(Export, RoundTripIsBitExact) {
  testgen::TempDir dir;
  Rng rng(34);
  for (int i = 0; i < 10; ++i) {
    const auto g = build_face_graph(geom::execute(testgen::multi_extrusion(rng)), 6);
    const auto path = dir / ("g" + std::to_string(i) + ".json");
    export_tensors(g, path);
    const auto back = read_archive(path);
    const auto ref = to_archive(g);
    ASSERT_EQ(back.tensors.size(), ref.tensors.size());
    for (std::size_t k = 0; k < ref.tensors.size(); ++k) {
      EXPECT_EQ(back.tensors[k].name, ref.tensors[k].name);
      EXPECT_EQ(back.tensors[k].shape, ref.tensors[k].shape);
      ASSERT_EQ(back.tensors[k].data.size(), ref.tensors[k].data.size());
      for (std::size_t j = 0; j < ref.tensors[k].data.size(); ++j) {
        const float x = static_cast<float>(ref.tensors[k].data[j]), y = static_cast<float>(back.tensors[k].data[j]);
        ASSERT_EQ(std::memcmp(&x, &y, sizeof x), 0);
      }
    }
  }
}
