#include "cadkit/code/tokens.hpp"

#include <bit>

namespace cadkit::code {

namespace {

constexpr ParamMask bit(int slot) { return static_cast<ParamMask>(1u << slot); }

constexpr ParamMask kSolMask = bit(kX) | bit(kY);
constexpr ParamMask kLineMask = bit(kX) | bit(kY);
constexpr ParamMask kArcMask = bit(kX) | bit(kY) | bit(kSweep) | bit(kCcw);
constexpr ParamMask kCircleMask = bit(kX) | bit(kY) | bit(kRadius);
constexpr ParamMask kExtMask = bit(kTheta) | bit(kPhi) | bit(kGamma) | bit(kPx) | bit(kPy) | bit(kPz) |
                               bit(kScale) | bit(kE1) | bit(kE2) | bit(kBoolOp) | bit(kExtent);

std::optional<CommandType> command_from_string(std::string_view s) {
  if (s == "SOL") return CommandType::Sol;
  if (s == "Line") return CommandType::Line;
  if (s == "Arc") return CommandType::Arc;
  if (s == "Circle") return CommandType::Circle;
  if (s == "Ext") return CommandType::Ext;
  return std::nullopt;
}

int upper_bound_for(int slot) {
  switch (slot) {
    case kCcw: return 1;
    case kBoolOp: return 3;
    case kExtent: return 2;
    default: return kMaxLevel;
  }
}

}  // namespace

const char* to_string(CommandType type) {
  switch (type) {
    case CommandType::Sol: return "SOL";
    case CommandType::Line: return "Line";
    case CommandType::Arc: return "Arc";
    case CommandType::Circle: return "Circle";
    case CommandType::Ext: return "Ext";
    case CommandType::Eos: return "EOS";
  }
  return "?";
}

ParamMask used_mask(CommandType type) {
  switch (type) {
    case CommandType::Sol: return kSolMask;
    case CommandType::Line: return kLineMask;
    case CommandType::Arc: return kArcMask;
    case CommandType::Circle: return kCircleMask;
    case CommandType::Ext: return kExtMask;
    case CommandType::Eos: return 0;
  }
  return 0;
}

ParamMask TokenRow::mask() const {
  ParamMask m = 0;
  for (int i = 0; i < kParamCount; ++i)
    if (params[i] != kUnused) m |= bit(i);
  return m;
}

void check_row_schema(const TokenRow& row, std::size_t index) {
  const ParamMask m = row.mask();
  const bool mask_ok = row.type == CommandType::Sol ? (m == kSolMask || m == 0) : m == used_mask(row.type);
  if (row.type == CommandType::Eos || !mask_ok)
    throw TokenError(TokenError::Kind::Schema, index,
                     "row " + std::to_string(index) + ": parameter mask does not match " + to_string(row.type));
  for (int i = 0; i < kParamCount; ++i) {
    if (row.params[i] == kUnused) continue;
    if (row.params[i] < 0 || row.params[i] > upper_bound_for(i))
      throw TokenError(TokenError::Kind::Schema, index,
                       "row " + std::to_string(index) + ": parameter " + std::to_string(i) + " out of range");
  }
}

Program from_tokens(const TokenSequence& seq) {
  Program program;
  int sketches = 0;
  bool open = false;       // a sketch is open (declared, not yet extruded)
  int loop_commands = -1;  // commands in the current loop; -1 when no loop yet
  auto order_error = [](std::size_t i, const std::string& msg) {
    return TokenError(TokenError::Kind::Order, i, "row " + std::to_string(i) + ": " + msg);
  };

  for (std::size_t i = 0; i < seq.rows.size(); ++i) {
    const TokenRow& row = seq.rows[i];
    check_row_schema(row, i);
    const auto& p = row.params;
    const SketchId current{sketches - 1};
    switch (row.type) {
      case CommandType::Sol: {
        if (!open) {
          program.statements.push_back(SketchDecl{SketchId{sketches}});
          ++sketches;
          open = true;
        } else if (loop_commands == 0) {
          throw order_error(i, "empty loop");
        }
        LoopStart ls{SketchId{sketches - 1}, std::nullopt};
        if (p[kX] != kUnused) ls.start = Point2q{p[kX], p[kY]};
        program.statements.push_back(ls);
        loop_commands = 0;
        break;
      }
      case CommandType::Line:
      case CommandType::Arc:
      case CommandType::Circle: {
        if (!open || loop_commands < 0) throw order_error(i, "command before any loop");
        GeomCommand g;
        if (row.type == CommandType::Line)
          g = Line{{p[kX], p[kY]}};
        else if (row.type == CommandType::Arc)
          g = Arc{{p[kX], p[kY]}, p[kSweep], p[kCcw] == 1};
        else
          g = Circle{{p[kX], p[kY]}, p[kRadius]};
        program.statements.push_back(Command{current, g});
        ++loop_commands;
        break;
      }
      case CommandType::Ext: {
        if (!open || loop_commands < 0) throw order_error(i, "extrude before any loop");
        if (loop_commands == 0) throw order_error(i, "empty loop");
        ExtrudeParams e;
        e.sketch = current;
        e.orientation = {p[kTheta], p[kPhi], p[kGamma]};
        e.origin = {p[kPx], p[kPy], p[kPz]};
        e.scale = p[kScale];
        e.distances = {p[kE1], p[kE2]};
        e.operation = static_cast<BoolOp>(p[kBoolOp]);
        e.extent = static_cast<ExtentType>(p[kExtent]);
        program.statements.push_back(Extrude{e});
        open = false;
        loop_commands = -1;
        break;
      }
      case CommandType::Eos: break;  // rejected by the schema check
    }
  }
  if (open && loop_commands == 0) throw order_error(seq.rows.size(), "empty loop at end of sequence");
  return program;
}

TokenSequence to_tokens(const Program& program) {
  TokenSequence seq;
  const auto& stmts = program.statements;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const auto& st = stmts[i];
    if (std::holds_alternative<SketchDecl>(st)) {
      if (i + 1 >= stmts.size() || !std::holds_alternative<LoopStart>(stmts[i + 1]))
        throw TokenError(TokenError::Kind::Unrepresentable, i,
                         "statement " + std::to_string(i) + ": a sketch without loops has no token form");
    } else if (const auto* ls = std::get_if<LoopStart>(&st)) {
      TokenRow row(CommandType::Sol);
      if (ls->start) {
        row.params[kX] = ls->start->x;
        row.params[kY] = ls->start->y;
      }
      seq.rows.push_back(row);
    } else if (const auto* cmd = std::get_if<Command>(&st)) {
      TokenRow row;
      std::visit(
          [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Line>) {
              row.type = CommandType::Line;
              row.params[kX] = g.endpoint.x;
              row.params[kY] = g.endpoint.y;
            } else if constexpr (std::is_same_v<T, Arc>) {
              row.type = CommandType::Arc;
              row.params[kX] = g.endpoint.x;
              row.params[kY] = g.endpoint.y;
              row.params[kSweep] = g.sweep;
              row.params[kCcw] = g.ccw ? 1 : 0;
            } else {
              row.type = CommandType::Circle;
              row.params[kX] = g.center.x;
              row.params[kY] = g.center.y;
              row.params[kRadius] = g.radius;
            }
          },
          cmd->geom);
      seq.rows.push_back(row);
    } else {
      const auto& e = std::get<Extrude>(st).params;
      TokenRow row(CommandType::Ext);
      row.params[kTheta] = e.orientation.x;
      row.params[kPhi] = e.orientation.y;
      row.params[kGamma] = e.orientation.z;
      row.params[kPx] = e.origin.x;
      row.params[kPy] = e.origin.y;
      row.params[kPz] = e.origin.z;
      row.params[kScale] = e.scale;
      row.params[kE1] = e.distances[0];
      row.params[kE2] = e.distances[1];
      row.params[kBoolOp] = static_cast<int>(e.operation);
      row.params[kExtent] = static_cast<int>(e.extent);
      seq.rows.push_back(row);
    }
  }
  return seq;
}

nlohmann::json to_json(const TokenSequence& seq) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : seq.rows) {
    nlohmann::json params = nlohmann::json::array();
    for (int i = 0; i < kParamCount; ++i)
      if (row.params[i] != kUnused) params.push_back(row.params[i]);
    rows.push_back({{"cmd", to_string(row.type)}, {"params", params}});
  }
  return {{"rows", rows}};
}

TokenSequence tokens_from_json(const nlohmann::json& j) {
  TokenSequence seq;
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
    throw TokenError(TokenError::Kind::Schema, 0, "token file must be an object with a 'rows' array");
  std::size_t index = 0;
  for (const auto& r : j["rows"]) {
    if (!r.is_object() || !r.contains("cmd") || !r["cmd"].is_string() || !r.contains("params") ||
        !r["params"].is_array())
      throw TokenError(TokenError::Kind::Schema, index, "row " + std::to_string(index) + ": malformed row");
    const auto type = command_from_string(r["cmd"].get<std::string>());
    if (!type)
      throw TokenError(TokenError::Kind::Schema, index, "row " + std::to_string(index) + ": unknown command");
    TokenRow row(*type);
    const auto& params = r["params"];
    ParamMask mask = used_mask(*type);
    if (*type == CommandType::Sol && params.empty()) mask = 0;
    if (static_cast<int>(params.size()) != std::popcount(mask))
      throw TokenError(TokenError::Kind::Schema, index,
                       "row " + std::to_string(index) + ": wrong parameter count for " + to_string(*type));
    std::size_t k = 0;
    for (int slot = 0; slot < kParamCount; ++slot) {
      if (!(mask & bit(slot))) continue;
      if (!params[k].is_number_integer())
        throw TokenError(TokenError::Kind::Schema, index,
                         "row " + std::to_string(index) + ": parameters must be integers");
      row.params[slot] = params[k++].get<int>();
    }
    check_row_schema(row, index);
    seq.rows.push_back(row);
    ++index;
  }
  return seq;
}

}  // namespace cadkit::code
