#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "cadkit/geom/face.hpp"
#include "cadkit/graph/archive.hpp"

namespace cadkit::graph {

inline constexpr int kNodeChannels = 7;  // point, normal, mask
inline constexpr int kEdgeChannels = 6;  // point, tangent

struct FaceGraph {
  geom::Solid solid;
  std::vector<geom::LeafFace> faces;  // nodes
  /// Per node: true when the leaf's outward normal points into the composite
  /// material (faces of cut tools), so grid normals are flipped.
  std::vector<bool> flipped;
  std::vector<std::array<std::size_t, 2>> edges;  // (i, j) with i < j, sorted
  /// Points found on the shared boundary of each edge.
  std::vector<std::vector<geom::Vec3>> edge_support;

  int resolution = 0;
  std::vector<double> node_grids;  // N x R x R x 7
  std::vector<double> edge_grids;  // E x R x 6

  std::size_t node_count() const { return faces.size(); }
};

/// Faces of the leaves that keep at least one surviving sample on a 32 x 32
/// probe grid. Throws EmptyResult when none do.
std::vector<geom::LeafFace> enumerate_faces(const geom::Solid& solid);

/// Nodes plus edges between faces that share a boundary curve of positive
/// length. Grids are left empty.
FaceGraph adjacency_graph(const geom::Solid& solid);

/// Fills node UV grids and edge curve grids at resolution R (R >= 2).
void sample_uv_grids(FaceGraph& graph, int resolution);

inline FaceGraph build_face_graph(const geom::Solid& solid, int resolution = 10) {
  FaceGraph g = adjacency_graph(solid);
  sample_uv_grids(g, resolution);
  return g;
}

bool is_connected(const FaceGraph& graph);

/// node_grids (N,R,R,7), edge_index (E,2), edge_grids (E,R,6), all f32.
TensorArchive to_archive(const FaceGraph& graph);
void export_tensors(const FaceGraph& graph, const std::filesystem::path& header);

}  // namespace cadkit::graph
