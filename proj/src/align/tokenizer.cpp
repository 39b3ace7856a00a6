#include "cadkit/align/tokenizer.hpp"

#include <sstream>

#include "cadkit/forge/forge.hpp"

namespace cadkit::align {

namespace {

// Fixed pieces of canonical statements. Longer fragments win over their
// prefixes, so a Line statement costs 7 tokens.
const char* const kFragments[] = {
    " = []\n",          ".new_loop(start=(", ".new_loop()\n",    ".Line(endpoint=(",  ".Arc(endpoint=(",
    ".Circle(center=(", "), radius=",        ", sweep=",         ", ccw=True)\n",     ", ccw=False)\n",
    "Extrude(sketch=",  ", orientation=(",   "), origin=(",      "), scale=",         ", distances=(",
    "), operation=",    ", extent=",         "NewBody",          "Join",              "Cut",
    "Intersect",        "OneSided)\n",       "Symmetric)\n",     "TwoSided)\n",       "sketch_",
    ", ",               "))\n",              ")\n",              "\n",                "True",
    "False",
};

}  // namespace

Tokenizer::Tokenizer() {
  for (const char* s : {"<pad>", "<bos>", "<eos>", "<unk>"}) {
    pieces_.emplace_back(s);  // never matched by encode
  }
  for (const char* f : kFragments) add(f);
  for (int n = 0; n <= 255; ++n) add(std::to_string(n));
  const forge::Prompts prompts = forge::Prompts::builtin();
  for (const std::string& text : {prompts.reverse, prompts.completion, prompts.correction}) {
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
      add(word);
      add(" " + word);
    }
  }
  for (char c = 32; c < 127; ++c) add(std::string(1, c));
}

void Tokenizer::add(std::string piece) {
  if (ids_.count(piece)) return;
  max_len_ = std::max(max_len_, piece.size());
  ids_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(std::move(piece));
}

int Tokenizer::id(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  std::size_t i = 0;
  std::string buf;
  while (i < text.size()) {
    int found = -1;
    std::size_t len = std::min(max_len_, text.size() - i);
    for (; len > 0; --len) {
      buf.assign(text.substr(i, len));
      auto it = ids_.find(buf);
      if (it != ids_.end()) {
        found = it->second;
        break;
      }
    }
    if (found < 0) {
      out.push_back(kUnk);
      ++i;
    } else {
      out.push_back(found);
      i += len;
    }
  }
  return out;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id <= kUnk || static_cast<std::size_t>(id) >= pieces_.size()) continue;
    out += pieces_[static_cast<std::size_t>(id)];
  }
  return out;
}

}  // namespace cadkit::align
