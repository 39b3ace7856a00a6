#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cadkit::code {

/// Quantized scalar on the 8-bit parameter grid.
using Level = int;
inline constexpr Level kMaxLevel = 255;

struct Point2q {
  Level x = 0;
  Level y = 0;
  auto operator<=>(const Point2q&) const = default;
};

struct Point3q {
  Level x = 0;
  Level y = 0;
  Level z = 0;
  auto operator<=>(const Point3q&) const = default;
};

/// Index k of the sketch variable `sketch_k`.
struct SketchId {
  int index = 0;
  auto operator<=>(const SketchId&) const = default;
  std::string name() const { return "sketch_" + std::to_string(index); }
};

struct Line {
  Point2q endpoint;
  bool operator==(const Line&) const = default;
};

/// Starts at the previous endpoint (or the loop start) and sweeps `sweep`
/// levels of a full turn towards `endpoint`.
struct Arc {
  Point2q endpoint;
  Level sweep = 0;
  bool ccw = true;
  bool operator==(const Arc&) const = default;
};

struct Circle {
  Point2q center;
  Level radius = 0;
  bool operator==(const Circle&) const = default;
};

using GeomCommand = std::variant<Line, Arc, Circle>;

enum class BoolOp { NewBody = 0, Join = 1, Cut = 2, Intersect = 3 };
enum class ExtentType { OneSided = 0, Symmetric = 1, TwoSided = 2 };

const char* to_string(BoolOp op);
const char* to_string(ExtentType extent);
std::optional<BoolOp> bool_op_from_string(std::string_view s);
std::optional<ExtentType> extent_from_string(std::string_view s);

struct ExtrudeParams {
  SketchId sketch;
  Point3q orientation;  // theta, phi, gamma
  Point3q origin;
  Level scale = 0;
  std::array<Level, 2> distances{};  // e1, e2
  BoolOp operation = BoolOp::NewBody;
  ExtentType extent = ExtentType::OneSided;
  bool operator==(const ExtrudeParams&) const = default;
};

struct SketchDecl {
  SketchId sketch;
  bool operator==(const SketchDecl&) const = default;
};

/// `sketch_k.new_loop(...)`. Line/Arc loops carry a start point; a Circle
/// loop has none.
struct LoopStart {
  SketchId sketch;
  std::optional<Point2q> start;
  bool operator==(const LoopStart&) const = default;
};

struct Command {
  SketchId sketch;
  GeomCommand geom;
  bool operator==(const Command&) const = default;
};

struct Extrude {
  ExtrudeParams params;
  bool operator==(const Extrude&) const = default;
};

using Statement = std::variant<SketchDecl, LoopStart, Command, Extrude>;

/// Half-open byte range into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Program {
  std::vector<Statement> statements;
  /// Source spans, one per statement, when the program came from parse().
  std::vector<Span> spans;

  /// Structural equality; spans are ignored.
  bool operator==(const Program& other) const { return statements == other.statements; }
};

SketchId statement_sketch(const Statement& st);

/// One loop of a sketch as it appears in the program.
struct LoopView {
  std::size_t start_index = 0;  // statement index of the LoopStart
  std::optional<Point2q> start;
  std::vector<GeomCommand> commands;
  std::vector<std::size_t> command_indices;
};

struct SketchView {
  SketchId id;
  std::size_t decl_index = 0;
  std::vector<LoopView> loops;
  std::optional<ExtrudeParams> extrude;
  std::size_t extrude_index = 0;
};

/// Groups statements by sketch. Assumes the structural invariants that
/// parse() enforces.
std::vector<SketchView> collect_sketches(const Program& program);

}  // namespace cadkit::code
