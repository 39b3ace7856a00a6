#include "cadkit/code/quantize.hpp"
#include "cadkit/geom/face.hpp"
#include "cadkit/geom/solid.hpp"

namespace cadkit::geom {

Profile evaluate_sketch(const code::SketchView& sketch) {
  if (sketch.loops.empty())
    throw GeomError(GeomError::Kind::MalformedLoop, sketch.id.name() + " has no loops");
  std::vector<Loop2> loops;
  loops.reserve(sketch.loops.size());
  for (const auto& lv : sketch.loops) loops.push_back(build_loop(lv));
  return build_profile(std::move(loops));
}

Profile evaluate_sketch(const code::Program& program, code::SketchId id) {
  for (const auto& sketch : code::collect_sketches(program))
    if (sketch.id == id) return evaluate_sketch(sketch);
  throw GeomError(GeomError::Kind::MissingSketch, id.name() + " is not declared");
}

Solid execute(const code::Program& program) {
  std::vector<Leaf> leaves;
  for (const auto& sketch : code::collect_sketches(program)) {
    if (!sketch.extrude) continue;
    const auto& ex = *sketch.extrude;
    Leaf leaf;
    leaf.profile = evaluate_sketch(sketch);
    leaf.frame = frame_from(ex);
    if (leaf.frame.scale <= 0.0)
      throw GeomError(GeomError::Kind::DegenerateExtrude, "extrusion of " + sketch.id.name() + " has zero scale");
    std::tie(leaf.near, leaf.far) = extent_interval(ex);
    if (leaf.far - leaf.near < 1e-12)
      throw GeomError(GeomError::Kind::ZeroExtent, "extrusion of " + sketch.id.name() + " has zero extent");
    leaf.op = set_op(ex.operation);
    leaves.push_back(std::move(leaf));
  }
  if (leaves.empty()) throw GeomError(GeomError::Kind::MissingSketch, "program extrudes no sketch");

  Solid solid(std::move(leaves));
  for (const auto& face : leaf_faces(solid))
    if (face_survives_somewhere(solid, face, 16)) return solid;
  throw GeomError(GeomError::Kind::EmptyResult, "the booleans leave nothing of the solid");
}

}  // namespace cadkit::geom
