#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadkit/code/program.hpp"

namespace cadkit::code {

/// Command tags of the integer token representation. Eos is only used as
/// padding by the metrics.
enum class CommandType { Sol = 0, Line = 1, Arc = 2, Circle = 3, Ext = 4, Eos = 5 };

const char* to_string(CommandType type);

inline constexpr int kParamCount = 16;
inline constexpr int kUnused = -1;

// Slot layout of the parameter vector.
enum Param : int {
  kX = 0,
  kY,
  kSweep,
  kCcw,
  kRadius,
  kTheta,
  kPhi,
  kGamma,
  kPx,
  kPy,
  kPz,
  kScale,
  kE1,
  kE2,
  kBoolOp,
  kExtent,
};

using ParamMask = std::uint16_t;

/// Used-slot mask of a command type. Sol has two legal masks: with a start
/// point (x, y) or without; this returns the former.
ParamMask used_mask(CommandType type);

struct TokenRow {
  CommandType type = CommandType::Eos;
  std::array<int, kParamCount> params;

  TokenRow() { params.fill(kUnused); }
  explicit TokenRow(CommandType t) : type(t) { params.fill(kUnused); }
  bool operator==(const TokenRow&) const = default;

  ParamMask mask() const;
};

struct TokenSequence {
  std::vector<TokenRow> rows;
  bool operator==(const TokenSequence&) const = default;
};

class TokenError : public std::runtime_error {
 public:
  enum class Kind { Schema, Order, Unrepresentable };
  TokenError(Kind kind, std::size_t row, const std::string& what)
      : std::runtime_error(what), kind_(kind), row_(row) {}
  Kind kind() const { return kind_; }
  std::size_t row() const { return row_; }

 private:
  Kind kind_;
  std::size_t row_;
};

/// Throws TokenError(Schema) when a row's mask or enum values are wrong.
void check_row_schema(const TokenRow& row, std::size_t index = 0);

Program from_tokens(const TokenSequence& seq);
TokenSequence to_tokens(const Program& program);

/// `{"rows": [{"cmd": "Line", "params": [140, 80]}, ...]}` with only the
/// used slots listed, in slot order.
nlohmann::json to_json(const TokenSequence& seq);
TokenSequence tokens_from_json(const nlohmann::json& j);

}  // namespace cadkit::code
