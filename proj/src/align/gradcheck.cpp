#include "cadkit/align/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cadkit/align/layers.hpp"
#include "cadkit/align/losses.hpp"
#include "cadkit/align/model.hpp"

namespace cadkit::align {

double relative_error(double analytic, double numeric, double noise, double floor) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::max(0.0, std::abs(analytic - numeric) - noise) / den;
}

double check_gradients(const std::function<Tensor()>& loss, const std::vector<Tensor>& inputs, Rng& rng,
                       std::size_t max_entries) {
  for (const auto& t : inputs) {
    if (!t.requires_grad()) throw std::invalid_argument("gradient check input does not require grad");
    t.zero_grad();
  }
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  NoGradGuard no_grad;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double>& v = inputs[k].node()->value;
    std::vector<std::size_t> entries(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) entries[i] = i;
    if (max_entries > 0 && entries.size() > max_entries) {
      shuffle(rng, entries);
      entries.resize(max_entries);
    }
    for (auto i : entries) {
      const double saved = v[i];
      auto at = [&](double offset) {
        v[i] = saved + offset;
        return loss().item();
      };
      // five-point stencil, truncation error O(h^4)
      const double f1 = at(kFdStep), f_1 = at(-kFdStep), f2 = at(2.0 * kFdStep), f_2 = at(-2.0 * kFdStep);
      v[i] = saved;
      const double numeric = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * kFdStep);
      // a few ulps of each loss value, amplified by 1.5 / h
      const double fmax = std::max({std::abs(f1), std::abs(f_1), std::abs(f2), std::abs(f_2)});
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() * fmax / kFdStep;
      worst = std::max(worst, relative_error(analytic[k][i], numeric, noise));
    }
  }
  for (const auto& t : inputs) t.zero_grad();
  return worst;
}

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(draw_between(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

Tensor random(Rng& rng, std::size_t r, std::size_t c, bool grad = true, double amp = 1.0) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = amp * (2.0 * uniform01(rng) - 1.0);
  return Tensor::from(r, c, std::move(v), grad);
}

/// Scalar probe of an arbitrary output: sum(out * W) with fixed random W.
Tensor probe(const Tensor& out, const Tensor& w) { return sum(mul(out, w)); }

std::vector<Tensor> values(const std::vector<std::pair<std::string, Tensor>>& named) {
  std::vector<Tensor> out;
  for (const auto& p : named) out.push_back(p.second);
  return out;
}

template <class F>
double with_probe(Rng& rng, const std::vector<Tensor>& inputs, F f, std::size_t max_entries = 0) {
  Tensor w;
  return check_gradients(
      [&] {
        Tensor out = f();
        if (!w.defined() || w.rows() != out.rows() || w.cols() != out.cols()) w = random(rng, out.rows(), out.cols(), false);
        return probe(out, w);
      },
      inputs, rng, max_entries);
}

AttnSegments random_segments(Rng& rng, std::size_t& nq, std::size_t& nk, bool causal) {
  AttnSegments s;
  const std::size_t count = pick(rng, 1, 3);
  nq = nk = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t ql = pick(rng, 1, 4);
    const std::size_t kl = causal ? ql : pick(rng, 1, 4);
    s.push(nq, ql, nk, kl);
    nq += ql;
    nk += kl;
  }
  return s;
}

AlignConfig tiny_config(Rng& rng) {
  AlignConfig c;
  c.heads = 2;
  c.d_align = 2 * pick(rng, 2, 4);
  c.d_llm = 2 * pick(rng, 2, 4);
  c.d_node = pick(rng, 2, 5);
  c.n_query_gen = pick(rng, 1, 4);
  c.grid_res = 2;
  c.uni_layers = 1;
  c.multi_layers = 2;
  c.llm_layers = 1;
  c.max_len = 24;
  c.temperature = 0.5 + uniform01(rng);
  c.seed = rng();
  return c;
}

BrepInput random_brep(Rng& rng, const AlignConfig& cfg, bool grad) {
  const std::size_t n = pick(rng, 1, 4);
  BrepInput b;
  b.grids = random(rng, n, cfg.grid_width(), grad);
  b.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (uniform01(rng) < 0.6) {
        b.neighbors[i].push_back(j);
        b.neighbors[j].push_back(i);
      }
  return b;
}

std::vector<int> random_code(Rng& rng, std::size_t vocab, std::size_t lo, std::size_t hi) {
  std::vector<int> c(pick(rng, lo, hi));
  for (auto& t : c) t = static_cast<int>(pick(rng, 4, vocab - 1));
  return c;
}

using Case = std::function<double(Rng&)>;

std::vector<std::pair<std::string, Case>> cases() {
  std::vector<std::pair<std::string, Case>> out;
  out.emplace_back("matmul", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 6));
    const auto b = random(rng, a.cols(), pick(rng, 1, 6));
    return with_probe(rng, {a, b}, [&] { return matmul(a, b); });
  });
  out.emplace_back("linear", [](Rng& rng) {
    const auto x = random(rng, pick(rng, 1, 6), pick(rng, 1, 6));
    const auto w = random(rng, x.cols(), pick(rng, 1, 6));
    const auto b = random(rng, 1, w.cols());
    return with_probe(rng, {x, w, b}, [&] { return linear(x, w, b); });
  });
  out.emplace_back("add", [](Rng& rng) {
    const std::size_t r = pick(rng, 1, 6), c = pick(rng, 1, 6);
    const auto a = random(rng, r, c), b = random(rng, r, c), row = random(rng, 1, c);
    return with_probe(rng, {a, b, row}, [&] { return add(add(a, b), row); });
  });
  out.emplace_back("sub", [](Rng& rng) {
    const std::size_t r = pick(rng, 1, 6), c = pick(rng, 1, 6);
    const auto a = random(rng, r, c), b = random(rng, r, c);
    return with_probe(rng, {a, b}, [&] { return sub(a, b); });
  });
  out.emplace_back("mul", [](Rng& rng) {
    const std::size_t r = pick(rng, 1, 6), c = pick(rng, 1, 6);
    const auto a = random(rng, r, c), b = random(rng, r, c);
    return with_probe(rng, {a, b}, [&] { return mul(a, b); });
  });
  out.emplace_back("scale", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 6));
    const double s = 4.0 * uniform01(rng) - 2.0;
    return with_probe(rng, {a}, [&] { return scale(a, s); });
  });
  out.emplace_back("gelu", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 6), true, 3.0);
    return with_probe(rng, {a}, [&] { return gelu(a); });
  });
  out.emplace_back("layer_norm", [](Rng& rng) {
    const auto x = random(rng, pick(rng, 1, 5), pick(rng, 2, 8), true, 2.0);
    const auto g = random(rng, 1, x.cols()), b = random(rng, 1, x.cols());
    return with_probe(rng, {x, g, b}, [&] { return layer_norm(x, g, b); });
  });
  out.emplace_back("transpose", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 6));
    return with_probe(rng, {a}, [&] { return transpose(a); });
  });
  out.emplace_back("concat_cols", [](Rng& rng) {
    const std::size_t r = pick(rng, 1, 5);
    const auto a = random(rng, r, pick(rng, 1, 4)), b = random(rng, r, pick(rng, 1, 4));
    return with_probe(rng, {a, b}, [&] { return concat_cols({a, b, a}); });
  });
  out.emplace_back("concat_rows", [](Rng& rng) {
    const std::size_t c = pick(rng, 1, 5);
    const auto a = random(rng, pick(rng, 1, 4), c), b = random(rng, pick(rng, 1, 4), c);
    return with_probe(rng, {a, b}, [&] { return concat_rows({b, a, b}); });
  });
  out.emplace_back("slice_rows", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 2, 7), pick(rng, 1, 5));
    const std::size_t r0 = pick(rng, 0, a.rows() - 1), r1 = pick(rng, r0 + 1, a.rows());
    return with_probe(rng, {a}, [&] { return slice_rows(a, r0, r1); });
  });
  out.emplace_back("gather_rows", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 5));
    std::vector<std::size_t> idx(pick(rng, 1, 8));
    for (auto& i : idx) i = pick(rng, 0, a.rows() - 1);
    return with_probe(rng, {a}, [&] { return gather_rows(a, idx); });
  });
  out.emplace_back("gather_mean", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 6), pick(rng, 1, 5));
    std::vector<std::vector<std::size_t>> groups(pick(rng, 1, 5));
    for (auto& g : groups) {
      g.resize(pick(rng, 0, 4));
      for (auto& i : g) i = pick(rng, 0, a.rows() - 1);
    }
    return with_probe(rng, {a}, [&] { return gather_mean(a, groups); });
  });
  out.emplace_back("l2_normalize_rows", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 5), pick(rng, 1, 6));
    return with_probe(rng, {a}, [&] { return l2_normalize_rows(a); });
  });
  out.emplace_back("sum", [](Rng& rng) {
    const auto a = random(rng, pick(rng, 1, 5), pick(rng, 1, 6));
    return check_gradients([&] { return scale(sum(mul(a, a)), 0.5); }, {a}, rng);
  });
  out.emplace_back("cross_entropy", [](Rng& rng) {
    const auto logits = random(rng, pick(rng, 1, 6), pick(rng, 2, 7), true, 3.0);
    std::vector<int> targets(logits.rows());
    for (auto& t : targets) t = uniform01(rng) < 0.2 ? -1 : static_cast<int>(pick(rng, 0, logits.cols() - 1));
    targets[0] = 0;
    return check_gradients([&] { return cross_entropy(logits, targets); }, {logits}, rng);
  });
  for (bool causal : {false, true}) {
    out.emplace_back(causal ? "attention_causal" : "attention", [causal](Rng& rng) {
      std::size_t nq = 0, nk = 0;
      const AttnSegments segs = random_segments(rng, nq, nk, causal);
      const int heads = static_cast<int>(pick(rng, 1, 3));
      const std::size_t d = static_cast<std::size_t>(heads) * pick(rng, 1, 3);
      const auto q = random(rng, nq, d, true, 2.0), k = random(rng, nk, d, true, 2.0), v = random(rng, nk, d);
      return with_probe(rng, {q, k, v}, [&] { return attention(q, k, v, segs, heads, causal); });
    });
  }
  out.emplace_back("encode_brep", [](Rng& rng) {
    const AlignConfig cfg = tiny_config(rng);
    Model m(cfg);
    const BrepInput a = random_brep(rng, cfg, true), b = random_brep(rng, cfg, true);
    const BrepBatch batch = BrepBatch::stack({&a, &b});
    auto inputs = values(m.params().group("encoder."));
    // grads w.r.t. the raw grids go through the stacked copy, so check the params
    return with_probe(rng, inputs, [&] { return m.encode(batch).z_brep; }, 12);
  });
  out.emplace_back("attn_pool_gen", [](Rng& rng) {
    ParamStore ps;
    const int heads = static_cast<int>(pick(rng, 1, 3));
    const std::size_t d = static_cast<std::size_t>(heads) * pick(rng, 1, 3);
    AttnPooler pool(ps, "pool.gen", pick(rng, 1, 4), d, heads, rng);
    const std::size_t n1 = pick(rng, 1, 5), n2 = pick(rng, 1, 5);
    const auto kv = random(rng, n1 + n2, d);
    auto inputs = values(ps.all());
    inputs.push_back(kv);
    return with_probe(rng, inputs, [&] { return pool(kv, {0, n1}, {n1, n2}); });
  });
  out.emplace_back("attn_pool_con", [](Rng& rng) {
    ParamStore ps;
    const int heads = static_cast<int>(pick(rng, 1, 3));
    const std::size_t d = static_cast<std::size_t>(heads) * pick(rng, 1, 3);
    AttnPooler gen(ps, "pool.gen", pick(rng, 1, 4), d, heads, rng);
    AttnPooler con(ps, "pool.con", 1, d, heads, rng);
    const std::size_t n = pick(rng, 1, 6);
    const auto kv = random(rng, n, d);
    auto inputs = values(ps.all());
    inputs.push_back(kv);
    return with_probe(rng, inputs, [&] { return con(gen(kv, {0}, {n}), {0}, {gen.n_query()}); });
  });
  out.emplace_back("contrastive_loss", [](Rng& rng) {
    const std::size_t b = pick(rng, 2, 6), d = pick(rng, 2, 6);
    const auto z = random(rng, b, d), t = random(rng, b, d);
    const double eta = 0.2 + uniform01(rng);
    return check_gradients([&] { return contrastive_loss(z, t, eta); }, {z, t}, rng);
  });
  out.emplace_back("text_eos", [](Rng& rng) {
    const AlignConfig cfg = tiny_config(rng);
    Model m(cfg);
    const auto c1 = random_code(rng, m.config().vocab, 1, 6), c2 = random_code(rng, m.config().vocab, 1, 6);
    const CodeTokenBatch batch = CodeTokenBatch::build({&c1, &c2});
    return with_probe(rng, values(m.params().group("unimodal.")), [&] { return m.text_eos(batch); }, 12);
  });
  out.emplace_back("captioning_loss", [](Rng& rng) {
    const AlignConfig cfg = tiny_config(rng);  // 2-layer multimodal decoder
    Model m(cfg);
    const auto c1 = random_code(rng, m.config().vocab, 1, 6), c2 = random_code(rng, m.config().vocab, 1, 6);
    const CodeTokenBatch batch = CodeTokenBatch::build({&c1, &c2});
    const auto z_gen = random(rng, 2 * cfg.n_query_gen, cfg.d_align);
    auto inputs = values(m.params().group("multimodal."));
    inputs.push_back(z_gen);
    return check_gradients(
        [&] { return captioning_loss(m.caption_logits(batch, z_gen), batch.targets, batch.size()); }, inputs, rng,
        12);
  });
  out.emplace_back("total_loss", [](Rng& rng) {
    const auto a = random(rng, 1, 1), b = random(rng, 1, 1);
    const double lc = 2.0 * uniform01(rng), lp = 2.0 * uniform01(rng);
    return check_gradients([&] { return total_loss(mul(a, a), mul(b, a), lc, lp); }, {a, b}, rng);
  });
  out.emplace_back("projector", [](Rng& rng) {
    ParamStore ps;
    const std::size_t din = pick(rng, 1, 6), dout = pick(rng, 1, 6);
    Projector proj(ps, din, dout, rng);
    const auto z = random(rng, pick(rng, 1, 5), din);
    auto inputs = values(ps.all());
    inputs.push_back(z);
    return with_probe(rng, inputs, [&] { return proj(z); });
  });
  out.emplace_back("stage1_loss", [](Rng& rng) {
    const AlignConfig cfg = tiny_config(rng);
    Model m(cfg);
    const BrepInput a = random_brep(rng, cfg, false), b = random_brep(rng, cfg, false);
    const BrepBatch batch = BrepBatch::stack({&a, &b});
    const auto p1 = random_code(rng, m.config().vocab, 0, 3), p2 = random_code(rng, m.config().vocab, 0, 3);
    const auto c1 = random_code(rng, m.config().vocab, 1, 5), c2 = random_code(rng, m.config().vocab, 1, 5);
    auto inputs = values(m.params().group("projector."));
    for (auto& t : values(m.params().group("llm."))) inputs.push_back(t);
    return check_gradients([&] { return m.stage1(batch, {&p1, &p2}, {&c1, &c2}); }, inputs, rng, 12);
  });
  return out;
}

}  // namespace

std::vector<GradCheckResult> gradient_suite(std::size_t trials, std::uint64_t seed) {
  std::vector<GradCheckResult> results;
  std::uint64_t k = 0;
  for (auto& [name, fn] : cases()) {
    GradCheckResult r;
    r.op = name;
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(seed, k++));
      r.max_rel_err = std::max(r.max_rel_err, fn(rng));
      ++r.trials;
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace cadkit::align
