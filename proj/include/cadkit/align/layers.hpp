#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cadkit/align/ops.hpp"
#include "cadkit/util/random.hpp"

namespace cadkit::align {

enum class Init { Zeros, Ones, Xavier, Embedding };

/// Named parameters in creation order. Names are dotted paths whose first
/// component is the module group ("encoder", "pool", ...).
class ParamStore {
 public:
  Tensor make(const std::string& name, std::size_t rows, std::size_t cols, Init init, Rng& rng);

  const std::vector<std::pair<std::string, Tensor>>& all() const { return params_; }
  std::vector<std::pair<std::string, Tensor>> group(std::string_view prefix) const;
  const Tensor* find(std::string_view name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
};

struct Linear {
  Tensor w, b;
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
};

struct LayerNorm {
  Tensor g, b;
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, std::size_t d, Rng& rng);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, g, b); }
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& ps, const std::string& name, std::size_t d, int heads, Rng& rng);
  Tensor operator()(const Tensor& xq, const Tensor& xkv, const AttnSegments& segs, bool causal) const;
};

struct FeedForward {
  Linear fc1, fc2;
  FeedForward() = default;
  FeedForward(ParamStore& ps, const std::string& name, std::size_t d, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
};

/// Pre-norm self-attention block.
struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ff;
  EncoderLayer() = default;
  EncoderLayer(ParamStore& ps, const std::string& name, std::size_t d, int heads, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const AttnSegments& segs, bool causal) const;
};

/// Pre-norm causal self-attention, cross-attention over `memory`, then MLP.
struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;
  DecoderLayer() = default;
  DecoderLayer(ParamStore& ps, const std::string& name, std::size_t d, int heads, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const AttnSegments& self_segs, const Tensor& memory,
                    const AttnSegments& cross_segs) const;
};

}  // namespace cadkit::align
