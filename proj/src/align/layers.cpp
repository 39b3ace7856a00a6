#include "cadkit/align/layers.hpp"

#include <cmath>

namespace cadkit::align {

Tensor ParamStore::make(const std::string& name, std::size_t rows, std::size_t cols, Init init, Rng& rng) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  std::vector<double> v(rows * cols, 0.0);
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      std::fill(v.begin(), v.end(), 1.0);
      break;
    case Init::Xavier: {
      const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (auto& x : v) x = a * (2.0 * uniform01(rng) - 1.0);
      break;
    }
    case Init::Embedding:
      // uniform with std 0.1
      for (auto& x : v) x = 0.1 * std::sqrt(3.0) * (2.0 * uniform01(rng) - 1.0);
      break;
  }
  Tensor t = Tensor::from(rows, cols, std::move(v), true);
  params_.emplace_back(name, t);
  return t;
}

std::vector<std::pair<std::string, Tensor>> ParamStore::group(std::string_view prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& p : params_)
    if (std::string_view(p.first).substr(0, prefix.size()) == prefix) out.push_back(p);
  return out;
}

const Tensor* ParamStore::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.first == name) return &p.second;
  return nullptr;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.second.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.second.zero_grad();
}

Linear::Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias) {
  w = ps.make(name + ".w", in, out, Init::Xavier, rng);
  if (bias) b = ps.make(name + ".b", 1, out, Init::Zeros, rng);
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, std::size_t d, Rng& rng) {
  g = ps.make(name + ".g", 1, d, Init::Ones, rng);
  b = ps.make(name + ".b", 1, d, Init::Zeros, rng);
}

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& name, std::size_t d, int h, Rng& rng)
    : q(ps, name + ".q", d, d, rng),
      k(ps, name + ".k", d, d, rng),
      v(ps, name + ".v", d, d, rng),
      o(ps, name + ".o", d, d, rng),
      heads(h) {
  if (h <= 0 || d % static_cast<std::size_t>(h) != 0)
    throw ShapeMismatch(name + ": width " + std::to_string(d) + " not divisible by " + std::to_string(h) + " heads");
}

Tensor MultiHeadAttention::operator()(const Tensor& xq, const Tensor& xkv, const AttnSegments& segs,
                                      bool causal) const {
  return o(attention(q(xq), k(xkv), v(xkv), segs, heads, causal));
}

FeedForward::FeedForward(ParamStore& ps, const std::string& name, std::size_t d, std::size_t hidden, Rng& rng)
    : fc1(ps, name + ".fc1", d, hidden, rng), fc2(ps, name + ".fc2", hidden, d, rng) {}

EncoderLayer::EncoderLayer(ParamStore& ps, const std::string& name, std::size_t d, int heads, std::size_t hidden,
                           Rng& rng)
    : ln1(ps, name + ".ln1", d, rng),
      ln2(ps, name + ".ln2", d, rng),
      attn(ps, name + ".attn", d, heads, rng),
      ff(ps, name + ".ff", d, hidden, rng) {}

Tensor EncoderLayer::operator()(const Tensor& x, const AttnSegments& segs, bool causal) const {
  const Tensor h = ln1(x);
  const Tensor y = add(x, attn(h, h, segs, causal));
  return add(y, ff(ln2(y)));
}

DecoderLayer::DecoderLayer(ParamStore& ps, const std::string& name, std::size_t d, int heads, std::size_t hidden,
                           Rng& rng)
    : ln1(ps, name + ".ln1", d, rng),
      ln2(ps, name + ".ln2", d, rng),
      ln3(ps, name + ".ln3", d, rng),
      self_attn(ps, name + ".self", d, heads, rng),
      cross_attn(ps, name + ".cross", d, heads, rng),
      ff(ps, name + ".ff", d, hidden, rng) {}

Tensor DecoderLayer::operator()(const Tensor& x, const AttnSegments& self_segs, const Tensor& memory,
                                const AttnSegments& cross_segs) const {
  const Tensor h = ln1(x);
  Tensor y = add(x, self_attn(h, h, self_segs, true));
  y = add(y, cross_attn(ln2(y), memory, cross_segs, false));
  return add(y, ff(ln3(y)));
}

}  // namespace cadkit::align
