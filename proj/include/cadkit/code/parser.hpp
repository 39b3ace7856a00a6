#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cadkit/code/diagnostic.hpp"
#include "cadkit/code/program.hpp"

namespace cadkit::code {

enum class ParseMode {
  Complete,
  /// Accepts a program that stops inside a loop (a completion prefix).
  Partial,
};

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

/// Parses CAD Code text. Whitespace, blank lines, `#` comments and keyword
/// order are free; the resulting Program re-serializes to canonical text.
ParseResult parse(std::string_view text, ParseMode mode = ParseMode::Complete);

/// Canonical text: one statement per line, LF-terminated.
std::string serialize(const Program& program);
std::string format_statement(const Statement& st);

}  // namespace cadkit::code
