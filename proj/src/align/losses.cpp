#include "cadkit/align/losses.hpp"

#include <numeric>
#include <string>

namespace cadkit::align {

Tensor contrastive_from_similarity(const Tensor& sim, double eta) {
  if (sim.rows() != sim.cols()) throw ShapeMismatch("similarity matrix must be square");
  if (!(eta > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t b = sim.rows();
  std::vector<int> diag(b);
  std::iota(diag.begin(), diag.end(), 0);
  const Tensor logits = scale(sim, 1.0 / eta);
  const Tensor both = add(cross_entropy(logits, diag), cross_entropy(transpose(logits), diag));
  return scale(both, 1.0 / (2.0 * static_cast<double>(b)));
}

Tensor contrastive_loss(const Tensor& z_con, const Tensor& t_eos, double eta) {
  if (z_con.rows() != t_eos.rows() || z_con.cols() != t_eos.cols())
    throw ShapeMismatch("contrastive inputs " + std::to_string(z_con.rows()) + "x" + std::to_string(z_con.cols()) +
                        " and " + std::to_string(t_eos.rows()) + "x" + std::to_string(t_eos.cols()));
  const Tensor zn = l2_normalize_rows(z_con);
  const Tensor tn = l2_normalize_rows(t_eos);
  return contrastive_from_similarity(matmul(zn, transpose(tn)), eta);
}

Tensor captioning_loss(const Tensor& logits, const std::vector<int>& targets, std::size_t batch) {
  if (batch == 0) throw LengthMismatch("empty batch");
  return scale(cross_entropy(logits, targets), 1.0 / static_cast<double>(batch));
}

Tensor total_loss(const Tensor& l_con, const Tensor& l_cap, double lambda_con, double lambda_cap) {
  return add(scale(l_con, lambda_con), scale(l_cap, lambda_cap));
}

double total_loss(double l_con, double l_cap, double lambda_con, double lambda_cap) {
  return lambda_con * l_con + lambda_cap * l_cap;
}

Tensor stage1_loss(const Tensor& logits, const std::vector<int>& targets, std::size_t batch) {
  return captioning_loss(logits, targets, batch);
}

}  // namespace cadkit::align
