#include "cadkit/align/model.hpp"

#include <algorithm>
#include <numeric>

#include "cadkit/align/losses.hpp"

namespace cadkit::align {

void AlignConfig::check() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("align config: ") + what);
  };
  need(heads > 0, "heads must be positive");
  need(d_align % static_cast<std::size_t>(heads) == 0, "d_align must be divisible by heads");
  need(d_llm % static_cast<std::size_t>(heads) == 0, "d_llm must be divisible by heads");
  need(d_node > 0 && d_align > 0 && d_llm > 0, "widths must be positive");
  need(n_query_gen > 0 && n_query_con > 0, "query counts must be positive");
  need(temperature > 0.0, "temperature must be positive");
  need(lambda_con >= 0.0 && lambda_cap >= 0.0, "loss weights must be non-negative");
  need(grid_res >= 2, "grid_res must be at least 2");
  need(max_len > 1, "max_len too small");
  need(ff_mult > 0, "ff_mult must be positive");
  need(uni_layers >= 0 && multi_layers >= 0 && llm_layers >= 0, "negative layer count");
}

nlohmann::json AlignConfig::to_json() const {
  return {{"n_query_gen", n_query_gen}, {"n_query_con", n_query_con}, {"d_align", d_align},
          {"d_node", d_node},           {"d_brep", d_brep()},         {"d_llm", d_llm},
          {"heads", heads},             {"temperature", temperature}, {"lambda_con", lambda_con},
          {"lambda_cap", lambda_cap},   {"vocab", vocab},             {"max_len", max_len},
          {"grid_res", grid_res},       {"uni_layers", uni_layers},   {"multi_layers", multi_layers},
          {"llm_layers", llm_layers},   {"ff_mult", ff_mult},         {"seed", seed}};
}

AlignConfig AlignConfig::from_json(const nlohmann::json& j) {
  AlignConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_query_gen", c.n_query_gen);
  get("n_query_con", c.n_query_con);
  get("d_align", c.d_align);
  get("d_node", c.d_node);
  get("d_llm", c.d_llm);
  get("heads", c.heads);
  get("temperature", c.temperature);
  get("lambda_con", c.lambda_con);
  get("lambda_cap", c.lambda_cap);
  get("vocab", c.vocab);
  get("max_len", c.max_len);
  get("grid_res", c.grid_res);
  get("uni_layers", c.uni_layers);
  get("multi_layers", c.multi_layers);
  get("llm_layers", c.llm_layers);
  get("ff_mult", c.ff_mult);
  get("seed", c.seed);
  if (j.contains("d_brep") && j.at("d_brep").get<std::size_t>() != c.d_brep())
    throw std::invalid_argument("align config: d_brep must equal 2 * d_node");
  return c;
}

// ---- inputs ----

BrepInput BrepInput::from_graph(const graph::FaceGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0 || g.node_grids.empty()) throw ShapeMismatch("face graph has no sampled grids");
  const std::size_t width = g.node_grids.size() / n;
  BrepInput in;
  in.grids = Tensor::from(n, width, g.node_grids);
  in.neighbors.resize(n);
  for (const auto& e : g.edges) {
    in.neighbors[e[0]].push_back(e[1]);
    in.neighbors[e[1]].push_back(e[0]);
  }
  return in;
}

BrepInput BrepInput::from_archive(const graph::TensorArchive& a) {
  const auto& grids = a.at("node_grids");
  if (grids.shape.size() != 4 || grids.shape[3] != static_cast<std::size_t>(graph::kNodeChannels) ||
      grids.shape[0] == 0)
    throw ShapeMismatch("node_grids must be (N, R, R, 7)");
  const std::size_t n = grids.shape[0];
  BrepInput in;
  in.grids = Tensor::from(n, grids.numel() / n, grids.data);
  in.neighbors.resize(n);
  const auto& edges = a.at("edge_index");
  if (edges.shape.size() != 2 || (edges.shape[0] > 0 && edges.shape[1] != 2))
    throw ShapeMismatch("edge_index must be (E, 2)");
  for (std::size_t e = 0; e < edges.shape[0]; ++e) {
    const auto i = static_cast<std::size_t>(edges.data[2 * e]);
    const auto j = static_cast<std::size_t>(edges.data[2 * e + 1]);
    if (i >= n || j >= n) throw ShapeMismatch("edge_index refers to a missing node");
    in.neighbors[i].push_back(j);
    in.neighbors[j].push_back(i);
  }
  return in;
}

BrepBatch BrepBatch::stack(const std::vector<const BrepInput*>& items) {
  if (items.empty()) throw ShapeMismatch("empty B-rep batch");
  const std::size_t width = items.front()->grids.cols();
  BrepBatch b;
  std::vector<double> data;
  std::size_t off = 0;
  for (const BrepInput* in : items) {
    if (in->grids.cols() != width) throw ShapeMismatch("B-rep grids of different resolution in one batch");
    if (in->nodes() == 0) throw ShapeMismatch("B-rep with no faces");
    data.insert(data.end(), in->grids.data().begin(), in->grids.data().end());
    for (const auto& nb : in->neighbors) {
      std::vector<std::size_t> g;
      for (auto j : nb) g.push_back(j + off);
      b.neighbors.push_back(std::move(g));
    }
    b.offsets.push_back(off);
    b.counts.push_back(in->nodes());
    off += in->nodes();
  }
  b.grids = Tensor::from(off, width, std::move(data));
  return b;
}

CodeTokenBatch CodeTokenBatch::build(const std::vector<const std::vector<int>*>& codes) {
  if (codes.empty()) throw LengthMismatch("empty code batch");
  CodeTokenBatch c;
  std::size_t off = 0;
  for (const auto* code : codes) {
    const std::size_t len = code->size() + 1;
    c.offsets.push_back(off);
    c.lengths.push_back(len);
    c.dec_ids.push_back(Tokenizer::kBos);
    for (std::size_t i = 0; i < code->size(); ++i) {
      const int t = (*code)[i];
      if (t < 0) throw LengthMismatch("negative token id");
      c.uni_ids.push_back(static_cast<std::size_t>(t));
      c.dec_ids.push_back(static_cast<std::size_t>(t));
      c.targets.push_back(t);
    }
    c.uni_ids.push_back(Tokenizer::kEos);
    c.targets.push_back(Tokenizer::kEos);
    for (std::size_t i = 0; i < len; ++i) c.positions.push_back(i);
    c.eos_rows.push_back(off + len - 1);
    off += len;
  }
  return c;
}

// ---- modules ----

BrepEncoder::BrepEncoder(ParamStore& ps, const AlignConfig& cfg, Rng& rng)
    : in1(ps, "encoder.in1", cfg.grid_width(), cfg.d_node, rng),
      in2(ps, "encoder.in2", cfg.d_node, cfg.d_node, rng),
      shape(ps, "encoder.shape", cfg.d_node, cfg.d_node, rng) {
  for (int r = 0; r < 2; ++r)
    rounds.emplace_back(ps, "encoder.mp" + std::to_string(r), 2 * cfg.d_node, cfg.d_node, rng);
}

EncoderOutput BrepEncoder::operator()(const BrepBatch& batch) const {
  if (batch.grids.cols() != in1.w.rows())
    throw ShapeMismatch("node grid width " + std::to_string(batch.grids.cols()) + ", encoder expects " +
                        std::to_string(in1.w.rows()));
  Tensor h = in2(gelu(in1(batch.grids)));
  for (const auto& r : rounds) h = add(h, gelu(r(concat_cols({h, gather_mean(h, batch.neighbors)}))));

  std::vector<std::vector<std::size_t>> graphs(batch.size());
  std::vector<std::size_t> owner;
  for (std::size_t g = 0; g < batch.size(); ++g)
    for (std::size_t i = 0; i < batch.counts[g]; ++i) {
      graphs[g].push_back(batch.offsets[g] + i);
      owner.push_back(g);
    }
  EncoderOutput out;
  out.e_node = h;
  out.e_shape = gelu(shape(gather_mean(h, graphs)));
  out.z_brep = concat_cols({h, gather_rows(out.e_shape, owner)});
  return out;
}

AttnPooler::AttnPooler(ParamStore& ps, const std::string& name, std::size_t n_query, std::size_t d, int heads,
                       Rng& rng)
    : queries(ps.make(name + ".queries", n_query, d, Init::Embedding, rng)),
      attn(ps, name + ".attn", d, heads, rng) {}

Tensor AttnPooler::operator()(const Tensor& kv, const std::vector<std::size_t>& offsets,
                              const std::vector<std::size_t>& counts) const {
  const std::size_t nq = n_query();
  std::vector<std::size_t> idx;
  AttnSegments segs;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    for (std::size_t i = 0; i < nq; ++i) idx.push_back(i);
    segs.push(b * nq, nq, offsets[b], counts[b]);
  }
  return attn(gather_rows(queries, idx), kv, segs, false);
}

Projector::Projector(ParamStore& ps, std::size_t d_in, std::size_t d_out, Rng& rng)
    : l1(ps, "projector.l1", d_in, d_out, rng),
      l2(ps, "projector.l2", d_out, d_out, rng),
      l3(ps, "projector.l3", d_out, d_out, rng) {}

Model::Model(AlignConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.vocab == 0) cfg_.vocab = tok_.vocab_size();
  cfg_.check();
  if (cfg_.vocab < tok_.vocab_size())
    throw std::invalid_argument("align config: vocab smaller than the tokenizer's " +
                                std::to_string(tok_.vocab_size()));
  Rng rng(splitmix64(cfg_.seed));
  const std::size_t da = cfg_.d_align, dl = cfg_.d_llm;
  encoder_ = BrepEncoder(params_, cfg_, rng);
  brep_to_align_ = Linear(params_, "pool.in", cfg_.d_brep(), da, rng);
  pool_gen_ = AttnPooler(params_, "pool.gen", cfg_.n_query_gen, da, cfg_.heads, rng);
  pool_con_ = AttnPooler(params_, "pool.con", cfg_.n_query_con, da, cfg_.heads, rng);

  uni_tok_ = params_.make("unimodal.tok", cfg_.vocab, da, Init::Embedding, rng);
  uni_pos_ = params_.make("unimodal.pos", cfg_.max_len, da, Init::Embedding, rng);
  for (int i = 0; i < cfg_.uni_layers; ++i)
    uni_.emplace_back(params_, "unimodal.l" + std::to_string(i), da, cfg_.heads, cfg_.ff_mult * da, rng);
  uni_ln_ = LayerNorm(params_, "unimodal.ln", da, rng);

  dec_tok_ = params_.make("multimodal.tok", cfg_.vocab, da, Init::Embedding, rng);
  dec_pos_ = params_.make("multimodal.pos", cfg_.max_len, da, Init::Embedding, rng);
  for (int i = 0; i < cfg_.multi_layers; ++i)
    multi_.emplace_back(params_, "multimodal.l" + std::to_string(i), da, cfg_.heads, cfg_.ff_mult * da, rng);
  multi_ln_ = LayerNorm(params_, "multimodal.ln", da, rng);
  multi_head_ = Linear(params_, "multimodal.head", da, cfg_.vocab, rng);

  projector_ = Projector(params_, cfg_.d_brep(), dl, rng);
  llm_tok_ = params_.make("llm.tok", cfg_.vocab, dl, Init::Embedding, rng);
  llm_pos_ = params_.make("llm.pos", cfg_.max_len, dl, Init::Embedding, rng);
  for (int i = 0; i < cfg_.llm_layers; ++i)
    llm_.emplace_back(params_, "llm.l" + std::to_string(i), dl, cfg_.heads, cfg_.ff_mult * dl, rng);
  llm_ln_ = LayerNorm(params_, "llm.ln", dl, rng);
  llm_head_ = Linear(params_, "llm.head", dl, cfg_.vocab, rng);
}

namespace {

void check_positions(const std::vector<std::size_t>& positions, std::size_t max_len) {
  for (auto p : positions)
    if (p >= max_len)
      throw LengthMismatch("sequence longer than max_len " + std::to_string(max_len));
}

void check_ids(const std::vector<std::size_t>& ids, std::size_t vocab) {
  for (auto t : ids)
    if (t >= vocab) throw LengthMismatch("token id " + std::to_string(t) + " outside vocabulary");
}

AttnSegments self_segments(const std::vector<std::size_t>& offsets, const std::vector<std::size_t>& lengths) {
  AttnSegments s;
  for (std::size_t i = 0; i < offsets.size(); ++i) s.push(offsets[i], lengths[i], offsets[i], lengths[i]);
  return s;
}

}  // namespace

Pooled Model::pool(const Tensor& z_brep, const BrepBatch& b) const {
  Pooled p;
  p.z_gen = pool_gen_(brep_to_align_(z_brep), b.offsets, b.counts);
  const std::size_t nq = pool_gen_.n_query();
  std::vector<std::size_t> offs(b.size()), counts(b.size(), nq);
  for (std::size_t i = 0; i < b.size(); ++i) offs[i] = i * nq;
  p.z_con = pool_con_(p.z_gen, offs, counts);
  return p;
}

Tensor Model::text_eos(const CodeTokenBatch& c) const {
  check_ids(c.uni_ids, cfg_.vocab);
  check_positions(c.positions, cfg_.max_len);
  Tensor x = add(gather_rows(uni_tok_, c.uni_ids), gather_rows(uni_pos_, c.positions));
  const AttnSegments segs = self_segments(c.offsets, c.lengths);
  for (const auto& layer : uni_) x = layer(x, segs, false);
  return gather_rows(uni_ln_(x), c.eos_rows);
}

Tensor Model::caption_logits(const CodeTokenBatch& c, const Tensor& z_gen) const {
  check_ids(c.dec_ids, cfg_.vocab);
  check_positions(c.positions, cfg_.max_len);
  const std::size_t nq = pool_gen_.n_query();
  if (z_gen.rows() != c.size() * nq) throw ShapeMismatch("z_gen rows do not match the code batch");
  Tensor x = add(gather_rows(dec_tok_, c.dec_ids), gather_rows(dec_pos_, c.positions));
  const AttnSegments self = self_segments(c.offsets, c.lengths);
  AttnSegments cross;
  for (std::size_t i = 0; i < c.size(); ++i) cross.push(c.offsets[i], c.lengths[i], i * nq, nq);
  for (const auto& layer : multi_) x = layer(x, self, z_gen, cross);
  return multi_head_(multi_ln_(x));
}

AlignLosses Model::align_losses(const BrepBatch& b, const CodeTokenBatch& c) const {
  if (b.size() != c.size()) throw LengthMismatch("B-rep and code batches differ in size");
  if (cfg_.n_query_con != 1) throw ShapeMismatch("contrastive loss needs n_query_con = 1");
  const EncoderOutput enc = encode(b);
  const Pooled p = pool(enc.z_brep, b);
  AlignLosses l;
  l.con = contrastive_loss(p.z_con, text_eos(c), cfg_.temperature);
  l.cap = captioning_loss(caption_logits(c, p.z_gen), c.targets, c.size());
  l.total = total_loss(l.con, l.cap, cfg_.lambda_con, cfg_.lambda_cap);
  return l;
}

LmBatch Model::lm_batch(const BrepBatch& b, const std::vector<const std::vector<int>*>& prompts,
                        const std::vector<const std::vector<int>*>& codes) const {
  if (prompts.size() != b.size() || codes.size() != b.size())
    throw LengthMismatch("stage-1 batch parts differ in size");
  const std::size_t n_feat = b.grids.rows();
  LmBatch lm;
  auto token = [&](int t) {
    if (t < 0 || static_cast<std::size_t>(t) >= cfg_.vocab) throw LengthMismatch("token id outside vocabulary");
    return n_feat + static_cast<std::size_t>(t);
  };
  std::size_t off = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::size_t pos = 0;
    auto push = [&](std::size_t src, int target) {
      lm.source.push_back(src);
      lm.positions.push_back(pos++);
      lm.targets.push_back(target);
    };
    for (std::size_t f = 0; f < b.counts[i]; ++f) push(b.offsets[i] + f, -1);
    for (int t : *prompts[i]) push(token(t), -1);
    const auto& code = *codes[i];
    push(token(Tokenizer::kBos), code.empty() ? Tokenizer::kEos : code[0]);
    for (std::size_t k = 0; k < code.size(); ++k)
      push(token(code[k]), k + 1 < code.size() ? code[k + 1] : Tokenizer::kEos);
    lm.offsets.push_back(off);
    lm.lengths.push_back(pos);
    off += pos;
  }
  check_positions(lm.positions, cfg_.max_len);
  return lm;
}

Tensor Model::lm_logits(const Tensor& z_proj, const LmBatch& lm) const {
  Tensor x = add(gather_rows(concat_rows({z_proj, llm_tok_}), lm.source), gather_rows(llm_pos_, lm.positions));
  const AttnSegments segs = self_segments(lm.offsets, lm.lengths);
  for (const auto& layer : llm_) x = layer(x, segs, true);
  return llm_head_(llm_ln_(x));
}

Tensor Model::stage1(const BrepBatch& b, const std::vector<const std::vector<int>*>& prompts,
                     const std::vector<const std::vector<int>*>& codes) const {
  const Tensor z_proj = project(encode(b).z_brep);
  const LmBatch lm = lm_batch(b, prompts, codes);
  return stage1_loss(lm_logits(z_proj, lm), lm.targets, b.size());
}

std::vector<int> Model::generate(const BrepInput& brep, const std::vector<int>& prompt,
                                 std::size_t max_tokens) const {
  NoGradGuard no_grad;
  const BrepBatch b = BrepBatch::stack({&brep});
  const Tensor z_proj = project(encode(b).z_brep);
  std::vector<int> code;
  const std::size_t fixed = brep.nodes() + prompt.size() + 1;
  while (code.size() < max_tokens && fixed + code.size() < cfg_.max_len) {
    const LmBatch lm = lm_batch(b, {&prompt}, {&code});
    // last row is BOS or the latest token
    const Tensor logits = lm_logits(z_proj, lm);
    const std::size_t row = logits.rows() - 1;
    const std::size_t v = logits.cols();
    const double* r = logits.data().data() + row * v;
    const int next = static_cast<int>(std::max_element(r, r + v) - r);
    if (next == Tokenizer::kEos) break;
    code.push_back(next);
  }
  return code;
}

}  // namespace cadkit::align
