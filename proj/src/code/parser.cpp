#include "cadkit/code/parser.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <map>

namespace cadkit::code {

namespace {

// ----------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Int, Equals, LParen, RParen, LBracket, RBracket, Comma, Dot, Newline, End };

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  long long value = 0;  // Int only, saturated
  Span span;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::Equals: return "'='";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Newline: return "end of line";
    case Tok::End: return "end of input";
  }
  return "?";
}

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead >= 0xF0) return 4;
  if (lead >= 0xE0) return 3;
  if (lead >= 0xC0) return 2;
  return 1;
}

std::vector<Token> lex(std::string_view text, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (c == '\r' && i + 1 < n && text[i + 1] == '\n') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    Token tok;
    tok.span.begin = i;
    if (c == '\n') {
      tok.kind = Tok::Newline;
      ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < n && (is_ident_start(text[j]) || is_digit(text[j]))) ++j;
      tok.kind = Tok::Ident;
      i = j;
    } else if (is_digit(c)) {
      std::size_t j = i;
      long long v = 0;
      while (j < n && is_digit(text[j])) {
        v = std::min<long long>(v * 10 + (text[j] - '0'), 1'000'000'000LL);
        ++j;
      }
      tok.kind = Tok::Int;
      tok.value = v;
      i = j;
    } else {
      switch (c) {
        case '=': tok.kind = Tok::Equals; break;
        case '(': tok.kind = Tok::LParen; break;
        case ')': tok.kind = Tok::RParen; break;
        case '[': tok.kind = Tok::LBracket; break;
        case ']': tok.kind = Tok::RBracket; break;
        case ',': tok.kind = Tok::Comma; break;
        case '.': tok.kind = Tok::Dot; break;
        default: {
          const std::size_t len =
              std::min(utf8_length(static_cast<unsigned char>(c)), n - i);
          diags.push_back({Severity::Error, "lex.bad-char", {i, i + len},
                           "unexpected character '" + std::string(text.substr(i, len)) + "'"});
          i += len;
          continue;
        }
      }
      ++i;
    }
    tok.span.end = i;
    tok.text = text.substr(tok.span.begin, tok.span.end - tok.span.begin);
    out.push_back(tok);
  }
  Token end;
  end.kind = Tok::End;
  end.span = {n, n};
  out.push_back(end);
  return out;
}

// ----------------------------------------------------------------------------
// Syntax

struct Value {
  enum class Kind { Int, Ident, Tuple } kind = Kind::Int;
  long long number = 0;
  std::string_view ident;
  std::vector<std::pair<long long, Span>> items;
  Span span;
};

struct Kwarg {
  std::string_view name;
  Span name_span;
  Value value;
};

struct SyntaxError {
  Diagnostic diag;
};

std::optional<int> parse_sketch_name(std::string_view name) {
  constexpr std::string_view prefix = "sketch_";
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = name.substr(prefix.size());
  if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

class Parser {
 public:
  Parser(const std::vector<Token>& toks, std::vector<Diagnostic>& diags)
      : toks_(toks), diags_(diags) {}

  /// Returns statements with spans; syntax errors recover at end of line.
  void run(std::vector<Statement>& stmts, std::vector<Span>& spans) {
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        ++pos_;
        continue;
      }
      const std::size_t begin = peek().span.begin;
      try {
        Statement st = statement();
        if (peek().kind != Tok::Newline && peek().kind != Tok::End)
          fail(peek(), "syntax.expected-newline", "expected end of line");
        stmts.push_back(std::move(st));
        spans.push_back({begin, toks_[pos_ - 1].span.end});
      } catch (const SyntaxError& e) {
        diags_.push_back(e.diag);
        while (peek().kind != Tok::Newline && peek().kind != Tok::End) ++pos_;
      }
    }
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const Token& at, std::string code, std::string msg) {
    throw SyntaxError{{Severity::Error, std::move(code), at.span, std::move(msg)}};
  }

  const Token& expect(Tok kind) {
    if (peek().kind != kind)
      fail(peek(), "syntax.expected-token",
           std::string("expected ") + describe(kind) + ", found " + describe(peek().kind));
    return toks_[pos_++];
  }

  Statement statement() {
    const Token& head = expect(Tok::Ident);
    if (head.text == "Extrude") {
      auto args = call_args(head);
      return extrude(head, args);
    }
    const auto sketch_index = parse_sketch_name(head.text);
    if (!sketch_index)
      fail(head, "syntax.bad-identifier",
           "expected a sketch variable 'sketch_<k>' or 'Extrude', found '" + std::string(head.text) + "'");
    const SketchId sketch{*sketch_index};
    if (peek().kind == Tok::Equals) {
      ++pos_;
      expect(Tok::LBracket);
      expect(Tok::RBracket);
      return SketchDecl{sketch};
    }
    expect(Tok::Dot);
    const Token& method = expect(Tok::Ident);
    auto args = call_args(method);
    if (method.text == "new_loop") return loop_start(sketch, method, args);
    if (method.text == "Line") {
      Line line;
      line.endpoint = point2(method, args, "endpoint");
      done(args, method);
      return Command{sketch, line};
    }
    if (method.text == "Arc") {
      Arc arc;
      arc.endpoint = point2(method, args, "endpoint");
      arc.sweep = scalar(method, args, "sweep");
      arc.ccw = boolean(method, args, "ccw");
      done(args, method);
      return Command{sketch, arc};
    }
    if (method.text == "Circle") {
      Circle circle;
      circle.center = point2(method, args, "center");
      circle.radius = scalar(method, args, "radius");
      done(args, method);
      return Command{sketch, circle};
    }
    fail(method, "syntax.unknown-method", "unknown method '" + std::string(method.text) + "'");
  }

  Statement loop_start(SketchId sketch, const Token& method, std::map<std::string_view, Kwarg>& args) {
    LoopStart ls{sketch, std::nullopt};
    if (args.count("start")) ls.start = point2(method, args, "start");
    done(args, method);
    return ls;
  }

  Statement extrude(const Token& head, std::map<std::string_view, Kwarg>& args) {
    ExtrudeParams p;
    {
      const Kwarg& a = take(head, args, "sketch");
      if (a.value.kind != Value::Kind::Ident) fail_value(a, "a sketch variable");
      const auto idx = parse_sketch_name(a.value.ident);
      if (!idx) fail_value(a, "a sketch variable");
      p.sketch = SketchId{*idx};
    }
    p.orientation = point3(head, args, "orientation");
    p.origin = point3(head, args, "origin");
    p.scale = scalar(head, args, "scale");
    {
      const Kwarg& a = take(head, args, "distances");
      const auto v = tuple(a, 2);
      p.distances = {v[0], v[1]};
    }
    {
      const Kwarg& a = take(head, args, "operation");
      std::optional<BoolOp> op;
      if (a.value.kind == Value::Kind::Ident) op = bool_op_from_string(a.value.ident);
      if (!op) fail_value(a, "one of NewBody, Join, Cut, Intersect");
      p.operation = *op;
    }
    {
      const Kwarg& a = take(head, args, "extent");
      std::optional<ExtentType> e;
      if (a.value.kind == Value::Kind::Ident) e = extent_from_string(a.value.ident);
      if (!e) fail_value(a, "one of OneSided, Symmetric, TwoSided");
      p.extent = *e;
    }
    done(args, head);
    return Extrude{p};
  }

  std::map<std::string_view, Kwarg> call_args(const Token& callee) {
    (void)callee;
    std::map<std::string_view, Kwarg> args;
    expect(Tok::LParen);
    while (peek().kind != Tok::RParen) {
      Kwarg kw;
      const Token& name = expect(Tok::Ident);
      kw.name = name.text;
      kw.name_span = name.span;
      expect(Tok::Equals);
      kw.value = value();
      if (args.count(kw.name))
        fail(name, "syntax.duplicate-argument", "duplicate argument '" + std::string(kw.name) + "'");
      args.emplace(kw.name, kw);
      if (peek().kind == Tok::Comma) {
        ++pos_;
        continue;
      }
      if (peek().kind != Tok::RParen)
        fail(peek(), "syntax.expected-token", std::string("expected ',' or ')', found ") + describe(peek().kind));
    }
    expect(Tok::RParen);
    return args;
  }

  Value value() {
    Value v;
    const Token& t = peek();
    v.span.begin = t.span.begin;
    if (t.kind == Tok::Int) {
      ++pos_;
      v.kind = Value::Kind::Int;
      v.number = t.value;
    } else if (t.kind == Tok::Ident) {
      ++pos_;
      v.kind = Value::Kind::Ident;
      v.ident = t.text;
    } else if (t.kind == Tok::LParen) {
      ++pos_;
      v.kind = Value::Kind::Tuple;
      while (true) {
        const Token& item = expect(Tok::Int);
        v.items.emplace_back(item.value, item.span);
        if (peek().kind == Tok::Comma) {
          ++pos_;
          if (peek().kind == Tok::RParen) break;
          continue;
        }
        break;
      }
      expect(Tok::RParen);
    } else {
      fail(t, "syntax.expected-value", std::string("expected a value, found ") + describe(t.kind));
    }
    v.span.end = toks_[pos_ - 1].span.end;
    return v;
  }

  const Kwarg& take(const Token& callee, std::map<std::string_view, Kwarg>& args, std::string_view key) {
    auto it = args.find(key);
    if (it == args.end())
      fail(callee, "syntax.missing-argument",
           "missing argument '" + std::string(key) + "' to " + std::string(callee.text));
    taken_.push_back(it->second);
    args.erase(it);
    return taken_.back();
  }

  void done(const std::map<std::string_view, Kwarg>& args, const Token& callee) {
    if (!args.empty()) {
      const Kwarg& extra = args.begin()->second;
      throw SyntaxError{{Severity::Error, "syntax.unknown-argument", extra.name_span,
                         "unknown argument '" + std::string(extra.name) + "' to " + std::string(callee.text)}};
    }
    taken_.clear();
  }

  [[noreturn]] void fail_value(const Kwarg& a, const std::string& expected) {
    throw SyntaxError{{Severity::Error, "syntax.bad-value", a.value.span,
                       "argument '" + std::string(a.name) + "' must be " + expected}};
  }

  Level level(long long v, Span span) {
    if (v > kMaxLevel) {
      diags_.push_back({Severity::Error, "semantic.out-of-range", span,
                        "value " + std::to_string(v) + " is outside the quantization grid [0, 255]"});
      return kMaxLevel;
    }
    return static_cast<Level>(v);
  }

  std::vector<Level> tuple(const Kwarg& a, std::size_t arity) {
    if (a.value.kind != Value::Kind::Tuple || a.value.items.size() != arity)
      fail_value(a, "a tuple of " + std::to_string(arity) + " integers");
    std::vector<Level> out;
    for (const auto& [v, span] : a.value.items) out.push_back(level(v, span));
    return out;
  }

  Point2q point2(const Token& callee, std::map<std::string_view, Kwarg>& args, std::string_view key) {
    const auto v = tuple(take(callee, args, key), 2);
    return {v[0], v[1]};
  }

  Point3q point3(const Token& callee, std::map<std::string_view, Kwarg>& args, std::string_view key) {
    const auto v = tuple(take(callee, args, key), 3);
    return {v[0], v[1], v[2]};
  }

  Level scalar(const Token& callee, std::map<std::string_view, Kwarg>& args, std::string_view key) {
    const Kwarg& a = take(callee, args, key);
    if (a.value.kind != Value::Kind::Int) fail_value(a, "an integer");
    return level(a.value.number, a.value.span);
  }

  bool boolean(const Token& callee, std::map<std::string_view, Kwarg>& args, std::string_view key) {
    const Kwarg& a = take(callee, args, key);
    if (a.value.kind == Value::Kind::Ident && a.value.ident == "True") return true;
    if (a.value.kind == Value::Kind::Ident && a.value.ident == "False") return false;
    fail_value(a, "True or False");
  }

  const std::vector<Token>& toks_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  std::deque<Kwarg> taken_;
};

// ----------------------------------------------------------------------------
// Structural checks

void check_structure(const std::vector<Statement>& stmts, const std::vector<Span>& spans, ParseMode mode,
                     std::vector<Diagnostic>& diags) {
  auto error = [&](std::size_t i, std::string code, std::string msg) {
    diags.push_back({Severity::Error, std::move(code), spans[i], std::move(msg)});
  };

  int declared = 0;            // number of sketches declared so far
  bool extruded = false;       // current sketch already extruded
  int loops = 0;               // loops in current sketch
  bool in_loop = false;        // current sketch has an open loop
  int loop_commands = 0;       // commands in the open loop
  std::size_t loop_index = 0;  // statement index of the open LoopStart

  auto close_loop = [&](std::size_t at, bool end_of_input) {
    if (in_loop && loop_commands == 0 && !(end_of_input && mode == ParseMode::Partial))
      error(loop_index, "semantic.empty-loop", "loop has no commands");
    (void)at;
    in_loop = false;
  };

  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const auto& st = stmts[i];
    const SketchId sk = statement_sketch(st);

    if (std::holds_alternative<SketchDecl>(st)) {
      close_loop(i, false);
      if (sk.index < declared) {
        error(i, "semantic.duplicate-sketch", sk.name() + " is already declared");
        continue;
      }
      if (sk.index != declared) {
        error(i, "semantic.sketch-order", "expected sketch_" + std::to_string(declared) + ", found " + sk.name());
        continue;
      }
      if (declared > 0 && !extruded) {
        const std::string prev = SketchId{declared - 1}.name();
        if (loops == 0)
          error(i, "semantic.empty-sketch", prev + " has no loops");
        else
          error(i, "semantic.unextruded-sketch", prev + " must be extruded before a new sketch is declared");
      }
      ++declared;
      extruded = false;
      loops = 0;
      continue;
    }

    if (sk.index >= declared) {
      error(i, "semantic.undeclared-sketch", sk.name() + " is not declared");
      continue;
    }
    if (sk.index != declared - 1) {
      error(i, "semantic.stale-sketch", sk.name() + " is not the current sketch");
      continue;
    }
    if (extruded) {
      error(i, "semantic.after-extrude", sk.name() + " was already extruded");
      continue;
    }

    if (std::holds_alternative<LoopStart>(st)) {
      close_loop(i, false);
      in_loop = true;
      loop_commands = 0;
      loop_index = i;
      ++loops;
    } else if (std::holds_alternative<Command>(st)) {
      if (!in_loop) {
        error(i, "semantic.command-outside-loop", "command before " + sk.name() + ".new_loop()");
        continue;
      }
      ++loop_commands;
    } else {
      close_loop(i, false);
      if (loops == 0) {
        error(i, "semantic.empty-sketch", sk.name() + " has no loops to extrude");
        continue;
      }
      extruded = true;
    }
  }
  close_loop(stmts.size(), true);
}

}  // namespace

ParseResult parse(std::string_view text, ParseMode mode) {
  ParseResult result;
  const auto toks = lex(text, result.diagnostics);
  std::vector<Statement> stmts;
  std::vector<Span> spans;
  Parser(toks, result.diagnostics).run(stmts, spans);
  if (has_errors(result.diagnostics)) return result;
  check_structure(stmts, spans, mode, result.diagnostics);
  if (has_errors(result.diagnostics)) return result;
  Program program;
  program.statements = std::move(stmts);
  program.spans = std::move(spans);
  result.program = std::move(program);
  return result;
}

}  // namespace cadkit::code
