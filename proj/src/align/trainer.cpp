#include "cadkit/align/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "cadkit/code/parser.hpp"
#include "cadkit/geom/solid.hpp"
#include "cadkit/graph/face_graph.hpp"

namespace cadkit::align {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Align:
      return "align";
    case Phase::Stage1:
      return "stage1";
    case Phase::Stage2:
      return "stage2";
  }
  return "?";
}

Phase phase_from_string(const std::string& s) {
  if (s == "align") return Phase::Align;
  if (s == "stage1") return Phase::Stage1;
  if (s == "stage2") return Phase::Stage2;
  throw std::invalid_argument("unknown phase '" + s + "'");
}

std::vector<std::string> trainable_groups(Phase p) {
  if (p == Phase::Align) return {"encoder.", "pool.", "unimodal.", "multimodal."};
  return {"projector.", "llm."};
}

Example make_example(const Model& model, const code::Program& target, const std::string& prompt) {
  const geom::Solid solid = geom::execute(target);
  Example ex;
  ex.brep = BrepInput::from_graph(graph::build_face_graph(solid, model.config().grid_res));
  ex.code = model.tokenizer().encode(code::serialize(target));
  ex.prompt = model.tokenizer().encode(prompt);
  return ex;
}

Trainer::Trainer(Model& model, TrainOptions options)
    : model_(model), opts_(options), adam_(options.adam), rng_(splitmix64(options.seed)) {
  for (const auto& g : trainable_groups(opts_.phase))
    for (auto& p : model_.params().group(g)) trainable_.push_back(p);
}

std::vector<std::size_t> Trainer::next_batch(std::size_t n) {
  std::vector<std::size_t> idx;
  if (opts_.batch_size == 0 || opts_.batch_size >= n) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
  while (idx.size() < opts_.batch_size) {
    if (cursor_ >= order_.size() || order_.size() != n) {
      order_.resize(n);
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      shuffle(rng_, order_);
      cursor_ = 0;
    }
    idx.push_back(order_[cursor_++]);
  }
  return idx;
}

LossRow Trainer::step(const std::vector<Example>& data) {
  if (data.empty()) throw std::invalid_argument("empty training set");
  // Only the phase's groups record gradients; frozen parameters stay untouched.
  for (auto& [name, p] : model_.params().all()) {
    p.node()->requires_grad = false;
    p.zero_grad();
  }
  for (auto& [name, p] : trainable_) p.node()->requires_grad = true;

  const auto idx = next_batch(data.size());
  std::vector<const BrepInput*> breps;
  std::vector<const std::vector<int>*> codes, prompts;
  for (auto i : idx) {
    breps.push_back(&data[i].brep);
    codes.push_back(&data[i].code);
    prompts.push_back(&data[i].prompt);
  }
  const BrepBatch b = BrepBatch::stack(breps);

  LossRow row;
  row.step = step_ + 1;
  Tensor loss;
  if (opts_.phase == Phase::Align) {
    const AlignLosses l = model_.align_losses(b, CodeTokenBatch::build(codes));
    row.con = l.con.item();
    row.cap = l.cap.item();
    loss = l.total;
  } else {
    loss = model_.stage1(b, prompts, codes);
    row.cap = loss.item();
  }
  row.total = loss.item();
  if (!std::isfinite(row.total)) throw Divergence(row.step);
  loss.backward();
  adam_.step(trainable_);
  for (auto& [name, p] : model_.params().all()) {
    p.node()->requires_grad = true;
    p.zero_grad();
  }
  ++step_;
  curve_.push_back(row);
  return row;
}

std::vector<LossRow> Trainer::run(const std::vector<Example>& data, const std::function<bool(std::size_t)>& done,
                                  std::size_t check_every) {
  std::vector<LossRow> rows;
  while (step_ < opts_.steps) {
    rows.push_back(step(data));
    if (done && check_every > 0 && step_ % check_every == 0 && done(step_)) break;
  }
  return rows;
}

void write_loss_csv(const std::vector<LossRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,loss_con,loss_cap,loss_total\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.step << ',' << r.con << ',' << r.cap << ',' << r.total << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Retrieval retrieval(const Model& model, const std::vector<Example>& data) {
  NoGradGuard no_grad;
  std::vector<const BrepInput*> breps;
  std::vector<const std::vector<int>*> codes;
  for (const auto& e : data) {
    breps.push_back(&e.brep);
    codes.push_back(&e.code);
  }
  const BrepBatch b = BrepBatch::stack(breps);
  const Tensor z = l2_normalize_rows(model.pool(model.encode(b).z_brep, b).z_con);
  const Tensor t = l2_normalize_rows(model.text_eos(CodeTokenBatch::build(codes)));
  const Tensor sim = matmul(z, transpose(t));
  const std::size_t n = data.size();
  std::size_t rows_ok = 0, cols_ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t br = 0, bc = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (sim.at(i, j) > sim.at(i, br)) br = j;
      if (sim.at(j, i) > sim.at(bc, i)) bc = j;
    }
    rows_ok += br == i;
    cols_ok += bc == i;
  }
  return {static_cast<double>(rows_ok) / static_cast<double>(n), static_cast<double>(cols_ok) / static_cast<double>(n)};
}

std::size_t exact_matches(const Model& model, const std::vector<Example>& data) {
  std::size_t hits = 0;
  for (const auto& e : data)
    if (model.generate(e.brep, e.prompt, e.code.size() + 1) == e.code) ++hits;
  return hits;
}

}  // namespace cadkit::align
