#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cadkit::align {

/// Closed-vocabulary tokenizer for canonical CAD Code and the task prompts.
/// Encoding is greedy longest match over DSL keyword and punctuation
/// fragments, the numerals 0 to 255, prompt words and single printable
/// characters. Anything else becomes <unk>.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Tokenizer();

  std::vector<int> encode(std::string_view text) const;
  /// Concatenates the pieces; special tokens are dropped.
  std::string decode(const std::vector<int>& ids) const;

  std::size_t vocab_size() const { return pieces_.size(); }
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  int id(std::string_view piece) const;

 private:
  void add(std::string piece);

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
  std::size_t max_len_ = 1;
};

}  // namespace cadkit::align
