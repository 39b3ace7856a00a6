#include "cadkit/code/program.hpp"

#include "cadkit/code/diagnostic.hpp"

namespace cadkit::code {

const char* to_string(BoolOp op) {
  switch (op) {
    case BoolOp::NewBody: return "NewBody";
    case BoolOp::Join: return "Join";
    case BoolOp::Cut: return "Cut";
    case BoolOp::Intersect: return "Intersect";
  }
  return "?";
}

const char* to_string(ExtentType extent) {
  switch (extent) {
    case ExtentType::OneSided: return "OneSided";
    case ExtentType::Symmetric: return "Symmetric";
    case ExtentType::TwoSided: return "TwoSided";
  }
  return "?";
}

std::optional<BoolOp> bool_op_from_string(std::string_view s) {
  if (s == "NewBody") return BoolOp::NewBody;
  if (s == "Join") return BoolOp::Join;
  if (s == "Cut") return BoolOp::Cut;
  if (s == "Intersect") return BoolOp::Intersect;
  return std::nullopt;
}

std::optional<ExtentType> extent_from_string(std::string_view s) {
  if (s == "OneSided") return ExtentType::OneSided;
  if (s == "Symmetric") return ExtentType::Symmetric;
  if (s == "TwoSided") return ExtentType::TwoSided;
  return std::nullopt;
}

SketchId statement_sketch(const Statement& st) {
  return std::visit(
      [](const auto& s) -> SketchId {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Extrude>)
          return s.params.sketch;
        else
          return s.sketch;
      },
      st);
}

std::vector<SketchView> collect_sketches(const Program& program) {
  std::vector<SketchView> sketches;
  auto find = [&](SketchId id) -> SketchView* {
    for (auto& s : sketches)
      if (s.id == id) return &s;
    return nullptr;
  };
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& st = program.statements[i];
    if (const auto* decl = std::get_if<SketchDecl>(&st)) {
      SketchView view;
      view.id = decl->sketch;
      view.decl_index = i;
      sketches.push_back(std::move(view));
    } else if (const auto* ls = std::get_if<LoopStart>(&st)) {
      if (auto* s = find(ls->sketch)) {
        LoopView loop;
        loop.start_index = i;
        loop.start = ls->start;
        s->loops.push_back(std::move(loop));
      }
    } else if (const auto* cmd = std::get_if<Command>(&st)) {
      if (auto* s = find(cmd->sketch); s && !s->loops.empty()) {
        s->loops.back().commands.push_back(cmd->geom);
        s->loops.back().command_indices.push_back(i);
      }
    } else if (const auto* ext = std::get_if<Extrude>(&st)) {
      if (auto* s = find(ext->params.sketch)) {
        s->extrude = ext->params;
        s->extrude_index = i;
      }
    }
  }
  return sketches;
}

std::string format_diagnostic(const Diagnostic& d) {
  std::string out = d.severity == Severity::Error ? "error" : "warning";
  out += " [" + d.code + "] at " + std::to_string(d.span.begin) + ".." +
         std::to_string(d.span.end) + ": " + d.message;
  return out;
}

}  // namespace cadkit::code
