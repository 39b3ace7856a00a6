#include "cadkit/code/validate.hpp"

#include "cadkit/code/quantize.hpp"
#include "cadkit/geom/curve2d.hpp"

namespace cadkit::code {

namespace {

Span span_of(const Program& p, std::size_t first, std::size_t last) {
  if (p.spans.size() != p.statements.size() || first >= p.spans.size()) return {};
  return {p.spans[first].begin, p.spans[std::min(last, p.spans.size() - 1)].end};
}

}  // namespace

std::vector<Diagnostic> validate(const Program& program) {
  std::vector<Diagnostic> diags;
  auto report = [&](const geom::GeomError& e, Span span, const std::string& where) {
    diags.push_back({Severity::Error, geom::to_string(e.kind()), span, where + ": " + e.what()});
  };

  bool any_extrude = false;
  for (const auto& sketch : collect_sketches(program)) {
    std::vector<geom::Loop2> loops;
    bool loops_ok = true;
    for (std::size_t li = 0; li < sketch.loops.size(); ++li) {
      const auto& lv = sketch.loops[li];
      const std::size_t last = lv.command_indices.empty() ? lv.start_index : lv.command_indices.back();
      try {
        loops.push_back(geom::build_loop(lv));
      } catch (const geom::GeomError& e) {
        report(e, span_of(program, lv.start_index, last), sketch.id.name() + " loop " + std::to_string(li));
        loops_ok = false;
      }
    }
    if (loops_ok && !loops.empty()) {
      try {
        geom::build_profile(std::move(loops));
      } catch (const geom::GeomError& e) {
        const std::size_t end = sketch.extrude ? sketch.extrude_index : sketch.decl_index;
        report(e, span_of(program, sketch.decl_index, end), sketch.id.name());
      }
    }
    if (!sketch.extrude) continue;
    any_extrude = true;
    const auto& ex = *sketch.extrude;
    const Span ex_span = span_of(program, sketch.extrude_index, sketch.extrude_index);
    if (ex.scale == 0)
      diags.push_back({Severity::Error, geom::to_string(geom::GeomError::Kind::DegenerateExtrude), ex_span,
                       "extrusion of " + sketch.id.name() + " has zero scale"});
    const double d1 = kDistanceRange.dequantize(ex.distances[0]);
    const double d2 = kDistanceRange.dequantize(ex.distances[1]);
    const bool zero = ex.extent == ExtentType::TwoSided ? std::abs(d1 + d2) < 1e-12 : std::abs(d1) < 1e-12;
    if (zero)
      diags.push_back({Severity::Error, geom::to_string(geom::GeomError::Kind::ZeroExtent), ex_span,
                       "extrusion of " + sketch.id.name() + " has zero extent"});
  }
  if (!any_extrude)
    diags.push_back({Severity::Error, geom::to_string(geom::GeomError::Kind::MissingSketch), {},
                     "program extrudes no sketch"});
  return diags;
}

}  // namespace cadkit::code
