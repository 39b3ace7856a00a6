#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cadkit/align/layers.hpp"
#include "cadkit/align/tokenizer.hpp"
#include "cadkit/graph/archive.hpp"
#include "cadkit/graph/face_graph.hpp"

namespace cadkit::align {

struct AlignConfig {
  std::size_t n_query_gen = 16;
  std::size_t n_query_con = 1;
  std::size_t d_align = 64;
  std::size_t d_node = 32;
  std::size_t d_llm = 64;
  int heads = 4;
  double temperature = 0.07;
  double lambda_con = 1.0;
  double lambda_cap = 2.0;
  std::size_t vocab = 0;  // 0: take the tokenizer's size
  std::size_t max_len = 512;
  int grid_res = 10;
  int uni_layers = 3;
  int multi_layers = 3;
  int llm_layers = 2;
  std::size_t ff_mult = 2;
  std::uint64_t seed = 0;

  std::size_t d_brep() const { return 2 * d_node; }
  std::size_t grid_width() const { return static_cast<std::size_t>(grid_res * grid_res * graph::kNodeChannels); }
  /// Throws std::invalid_argument on a broken invariant.
  void check() const;

  nlohmann::json to_json() const;
  static AlignConfig from_json(const nlohmann::json& j);
};

/// One face graph: flattened node grids (N x R*R*7) and neighbour lists.
struct BrepInput {
  Tensor grids;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t nodes() const { return grids.rows(); }
  static BrepInput from_graph(const graph::FaceGraph& g);
  static BrepInput from_archive(const graph::TensorArchive& a);
};

/// Several graphs stacked row-wise.
struct BrepBatch {
  Tensor grids;
  std::vector<std::vector<std::size_t>> neighbors;  // global row indices
  std::vector<std::size_t> offsets, counts;

  std::size_t size() const { return counts.size(); }
  static BrepBatch stack(const std::vector<const BrepInput*>& items);
};

/// Token sequences stacked row-wise. Each row of the unimodal input is the
/// code followed by EOS; the multimodal input is BOS followed by the code and
/// its targets are the code followed by EOS.
struct CodeTokenBatch {
  std::vector<std::size_t> uni_ids, dec_ids;
  std::vector<int> targets;
  std::vector<std::size_t> positions;  // within-sequence index of each row
  std::vector<std::size_t> offsets, lengths;
  std::vector<std::size_t> eos_rows;

  std::size_t size() const { return lengths.size(); }
  static CodeTokenBatch build(const std::vector<const std::vector<int>*>& codes);
};

/// Stage-1 sequences: features, prompt, then BOS + code. Row r takes
/// row source[r] of concat(z_proj, token table).
struct LmBatch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> positions;
  std::vector<int> targets;
  std::vector<std::size_t> offsets, lengths;

  std::size_t size() const { return lengths.size(); }
};

struct EncoderOutput {
  Tensor e_node;   // sum N x d_node
  Tensor e_shape;  // B x d_node
  Tensor z_brep;   // sum N x 2 d_node
};

struct Pooled {
  Tensor z_gen;  // B * n_query_gen x d_align
  Tensor z_con;  // B * n_query_con x d_align
};

struct AlignLosses {
  Tensor con, cap, total;
};

struct BrepEncoder {
  Linear in1, in2;
  std::vector<Linear> rounds;
  Linear shape;
  BrepEncoder() = default;
  BrepEncoder(ParamStore& ps, const AlignConfig& cfg, Rng& rng);
  EncoderOutput operator()(const BrepBatch& batch) const;
};

/// Learned queries attending over a stacked key set.
struct AttnPooler {
  Tensor queries;
  MultiHeadAttention attn;
  AttnPooler() = default;
  AttnPooler(ParamStore& ps, const std::string& name, std::size_t n_query, std::size_t d, int heads, Rng& rng);
  Tensor operator()(const Tensor& kv, const std::vector<std::size_t>& offsets,
                    const std::vector<std::size_t>& counts) const;
  std::size_t n_query() const { return queries.rows(); }
};

/// linear, GELU, linear, linear.
struct Projector {
  Linear l1, l2, l3;
  Projector() = default;
  Projector(ParamStore& ps, std::size_t d_in, std::size_t d_out, Rng& rng);
  Tensor operator()(const Tensor& z) const { return l3(l2(gelu(l1(z)))); }
};

class Model {
 public:
  explicit Model(AlignConfig cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  const AlignConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const Tokenizer& tokenizer() const { return tok_; }

  EncoderOutput encode(const BrepBatch& b) const { return encoder_(b); }
  Tensor to_align(const Tensor& z_brep) const { return brep_to_align_(z_brep); }
  Pooled pool(const Tensor& z_brep, const BrepBatch& b) const;
  /// B x d_align EOS states of the bidirectional code encoder.
  Tensor text_eos(const CodeTokenBatch& c) const;
  /// Multimodal decoder logits, one row per decoder input row.
  Tensor caption_logits(const CodeTokenBatch& c, const Tensor& z_gen) const;
  AlignLosses align_losses(const BrepBatch& b, const CodeTokenBatch& c) const;

  Tensor project(const Tensor& z_brep) const { return projector_(z_brep); }
  LmBatch lm_batch(const BrepBatch& b, const std::vector<const std::vector<int>*>& prompts,
                   const std::vector<const std::vector<int>*>& codes) const;
  Tensor lm_logits(const Tensor& z_proj, const LmBatch& lm) const;
  Tensor stage1(const BrepBatch& b, const std::vector<const std::vector<int>*>& prompts,
                const std::vector<const std::vector<int>*>& codes) const;
  /// Greedy decoding of code tokens (no BOS/EOS in the result).
  std::vector<int> generate(const BrepInput& brep, const std::vector<int>& prompt, std::size_t max_tokens) const;

  /// Group prefixes used for freezing.
  static constexpr const char* kEncoderGroup = "encoder.";

 private:
  AlignConfig cfg_;
  Tokenizer tok_;
  ParamStore params_;
  BrepEncoder encoder_;
  Linear brep_to_align_;
  AttnPooler pool_gen_, pool_con_;
  Tensor uni_tok_, uni_pos_;
  std::vector<EncoderLayer> uni_;
  LayerNorm uni_ln_;
  Tensor dec_tok_, dec_pos_;
  std::vector<DecoderLayer> multi_;
  LayerNorm multi_ln_;
  Linear multi_head_;
  Projector projector_;
  Tensor llm_tok_, llm_pos_;
  std::vector<EncoderLayer> llm_;
  LayerNorm llm_ln_;
  Linear llm_head_;
};

}  // namespace cadkit::align
