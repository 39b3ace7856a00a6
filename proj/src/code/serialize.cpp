#include <string>

#include "cadkit/code/parser.hpp"

namespace cadkit::code {

namespace {

std::string pt(Point2q p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

std::string pt(Point3q p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " + std::to_string(p.z) + ")";
}

struct Formatter {
  std::string operator()(const SketchDecl& s) const { return s.sketch.name() + " = []"; }

  std::string operator()(const LoopStart& s) const {
    std::string out = s.sketch.name() + ".new_loop(";
    if (s.start) out += "start=" + pt(*s.start);
    return out + ")";
  }

  std::string operator()(const Command& c) const {
    const std::string prefix = c.sketch.name() + ".";
    return std::visit(
        [&](const auto& g) -> std::string {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, Line>) {
            return prefix + "Line(endpoint=" + pt(g.endpoint) + ")";
          } else if constexpr (std::is_same_v<T, Arc>) {
            return prefix + "Arc(endpoint=" + pt(g.endpoint) + ", sweep=" + std::to_string(g.sweep) +
                   ", ccw=" + (g.ccw ? "True" : "False") + ")";
          } else {
            return prefix + "Circle(center=" + pt(g.center) + ", radius=" + std::to_string(g.radius) + ")";
          }
        },
        c.geom);
  }

  std::string operator()(const Extrude& e) const {
    const auto& p = e.params;
    return "Extrude(sketch=" + p.sketch.name() + ", orientation=" + pt(p.orientation) + ", origin=" + pt(p.origin) +
           ", scale=" + std::to_string(p.scale) + ", distances=(" + std::to_string(p.distances[0]) + ", " +
           std::to_string(p.distances[1]) + "), operation=" + to_string(p.operation) +
           ", extent=" + to_string(p.extent) + ")";
  }
};

}  // namespace

std::string format_statement(const Statement& st) { return std::visit(Formatter{}, st); }

std::string serialize(const Program& program) {
  std::string out;
  for (const auto& st : program.statements) {
    out += format_statement(st);
    out += '\n';
  }
  return out;
}

}  // namespace cadkit::code
