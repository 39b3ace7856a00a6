#pragma once

#include <string>
#include <vector>

#include "cadkit/code/program.hpp"

namespace cadkit::code {

enum class Severity { Error, Warning };

/// A finding about a program. `code` is a stable dotted identifier such as
/// "lex.bad-char", "syntax.expected-token", "semantic.empty-loop" or
/// "open-loop".
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  Span span;
  std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

std::string format_diagnostic(const Diagnostic& d);

}  // namespace cadkit::code
