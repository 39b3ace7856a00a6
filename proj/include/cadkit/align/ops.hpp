#pragma once

#include <vector>

#include "cadkit/align/tensor.hpp"

namespace cadkit::align {

class ZeroNorm : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Tensor matmul(const Tensor& a, const Tensor& b);
/// x[m,in] * w[in,out] + b[1,out]; b may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// Same shape, or b is a single row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor gelu(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor transpose(const Tensor& x);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
/// Row i of the result is the mean of x's rows in groups[i]; empty group gives zeros.
Tensor gather_mean(const Tensor& x, const std::vector<std::vector<std::size_t>>& groups);
Tensor l2_normalize_rows(const Tensor& x);
Tensor sum(const Tensor& x);
/// Sum over rows with target >= 0 of -log softmax(row)[target].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);

/// Row ranges for a stack of independent attention problems.
struct AttnSegments {
  std::vector<std::size_t> q_off, q_len, k_off, k_len;

  std::size_t count() const { return q_off.size(); }
  void push(std::size_t qo, std::size_t ql, std::size_t ko, std::size_t kl) {
    q_off.push_back(qo);
    q_len.push_back(ql);
    k_off.push_back(ko);
    k_len.push_back(kl);
  }
  /// One problem covering all rows of q and k.
  static AttnSegments single(std::size_t nq, std::size_t nk) {
    AttnSegments s;
    s.push(0, nq, 0, nk);
    return s;
  }
};

/// softmax(Q_h K_h^T / sqrt(d_h)) V_h per segment and head, heads concatenated.
/// Causal masks key j > query i (local indices; needs q_len == k_len).
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttnSegments& segs, int heads,
                 bool causal);

}  // namespace cadkit::align
