#include "cadkit/align/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cadkit::align {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

CMapM view(const Node& n) { return CMapM(n.value.data(), n.rows, n.cols); }
CMapM view(const Tensor& t) { return view(*t.node()); }
CMapM grad_view(const Node& n) { return CMapM(n.grad.data(), n.rows, n.cols); }
MapM grad_of(Node& n) { return MapM(n.grad_buffer(), n.rows, n.cols); }

std::string dims(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

void need(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

std::vector<double> to_vec(const Mat& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  need(a.cols() == b.rows(), "matmul " + dims(a) + " by " + dims(b));
  Mat c = view(a) * view(b);
  return make_result(a.rows(), b.cols(), to_vec(c), {a, b}, [](Node& n) {
    Node& a = *n.parents[0];
    Node& b = *n.parents[1];
    const auto g = grad_view(n);
    if (a.requires_grad) grad_of(a).noalias() += g * view(b).transpose();
    if (b.requires_grad) grad_of(b).noalias() += view(a).transpose() * g;
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  need(x.cols() == w.rows(), "linear input " + dims(x) + " with weight " + dims(w));
  Mat y = view(x) * view(w);
  std::vector<Tensor> parents{x, w};
  if (b.defined()) {
    need(b.rows() == 1 && b.cols() == w.cols(), "linear bias " + dims(b));
    y.rowwise() += view(b).row(0);
    parents.push_back(b);
  }
  return make_result(y.rows(), y.cols(), to_vec(y), std::move(parents), [](Node& n) {
    Node& x = *n.parents[0];
    Node& w = *n.parents[1];
    const auto g = grad_view(n);
    if (x.requires_grad) grad_of(x).noalias() += g * view(w).transpose();
    if (w.requires_grad) grad_of(w).noalias() += view(x).transpose() * g;
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) grad_of(*n.parents[2]) += g.colwise().sum();
  });
}

namespace {

Tensor add_scaled(const Tensor& a, const Tensor& b, double sb) {
  const bool bcast = b.rows() == 1 && a.rows() != 1;
  need(a.cols() == b.cols() && (bcast || a.rows() == b.rows()), "add " + dims(a) + " and " + dims(b));
  Mat y = view(a);
  if (bcast)
    y.rowwise() += sb * view(b).row(0);
  else
    y += sb * view(b);
  return make_result(a.rows(), a.cols(), to_vec(y), {a, b}, [bcast, sb](Node& n) {
    const auto g = grad_view(n);
    if (n.parents[0]->requires_grad) grad_of(*n.parents[0]) += g;
    if (n.parents[1]->requires_grad) {
      if (bcast)
        grad_of(*n.parents[1]) += sb * g.colwise().sum();
      else
        grad_of(*n.parents[1]) += sb * g;
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled(a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled(a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  need(a.rows() == b.rows() && a.cols() == b.cols(), "mul " + dims(a) + " and " + dims(b));
  Mat y = view(a).cwiseProduct(view(b));
  return make_result(a.rows(), a.cols(), to_vec(y), {a, b}, [](Node& n) {
    Node& a = *n.parents[0];
    Node& b = *n.parents[1];
    const auto g = grad_view(n);
    if (a.requires_grad) grad_of(a) += g.cwiseProduct(view(b));
    if (b.requires_grad) grad_of(b) += g.cwiseProduct(view(a));
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> y = a.data();
  for (auto& v : y) v *= s;
  return make_result(a.rows(), a.cols(), std::move(y), {a}, [s](Node& n) {
    grad_of(*n.parents[0]) += s * grad_view(n);
  });
}

Tensor gelu(const Tensor& x) {
  const std::vector<double>& xv = x.data();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] / std::numbers::sqrt2));
  return make_result(x.rows(), x.cols(), std::move(y), {x}, [](Node& n) {
    Node& x = *n.parents[0];
    double* gx = x.grad_buffer();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      const double v = x.value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      gx[i] += n.grad[i] * (cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v));
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t m = x.rows(), d = x.cols();
  need(gamma.rows() == 1 && gamma.cols() == d && beta.rows() == 1 && beta.cols() == d,
       "layer_norm params for width " + std::to_string(d));
  std::vector<double> xhat(m * d), rstd(m), y(m * d);
  const auto& xv = x.data();
  const auto& g = gamma.data();
  const auto& b = beta.data();
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv[r * d + c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xv[r * d + c] - mu) * (xv[r * d + c] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[r * d + c] = (xv[r * d + c] - mu) * rstd[r];
      y[r * d + c] = xhat[r * d + c] * g[c] + b[c];
    }
  }
  return make_result(m, d, std::move(y), {x, gamma, beta},
                     [xhat = std::move(xhat), rstd = std::move(rstd), m, d](Node& n) {
                       Node& x = *n.parents[0];
                       Node& gamma = *n.parents[1];
                       Node& beta = *n.parents[2];
                       const auto& gy = n.grad;
                       if (gamma.requires_grad || beta.requires_grad) {
                         double* gg = gamma.grad_buffer();
                         double* gb = beta.grad_buffer();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < d; ++c) {
                             gg[c] += gy[r * d + c] * xhat[r * d + c];
                             gb[c] += gy[r * d + c];
                           }
                       }
                       if (!x.requires_grad) return;
                       double* gx = x.grad_buffer();
                       const double inv_d = 1.0 / static_cast<double>(d);
                       for (std::size_t r = 0; r < m; ++r) {
                         double s1 = 0.0, s2 = 0.0;
                         for (std::size_t c = 0; c < d; ++c) {
                           const double dxh = gy[r * d + c] * gamma.value[c];
                           s1 += dxh;
                           s2 += dxh * xhat[r * d + c];
                         }
                         for (std::size_t c = 0; c < d; ++c) {
                           const double dxh = gy[r * d + c] * gamma.value[c];
                           gx[r * d + c] += rstd[r] * (dxh - s1 * inv_d - xhat[r * d + c] * s2 * inv_d);
                         }
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  Mat y = view(x).transpose();
  return make_result(x.cols(), x.rows(), to_vec(y), {x}, [](Node& n) {
    grad_of(*n.parents[0]) += grad_view(n).transpose();
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  need(!parts.empty(), "concat_cols of nothing");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    need(p.rows() == m, "concat_cols row count " + dims(p));
    total += p.cols();
  }
  Mat y(m, total);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    y.middleCols(c0, p.cols()) = view(p);
    c0 += p.cols();
  }
  return make_result(m, total, to_vec(y), parts, [](Node& n) {
    const auto g = grad_view(n);
    std::size_t c0 = 0;
    for (auto& p : n.parents) {
      if (p->requires_grad) grad_of(*p) += g.middleCols(c0, p->cols);
      c0 += p->cols;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  need(!parts.empty(), "concat_rows of nothing");
  const std::size_t d = parts.front().cols();
  std::vector<double> y;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    need(p.cols() == d, "concat_rows width " + dims(p));
    y.insert(y.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  return make_result(rows, d, std::move(y), parts, [](Node& n) {
    std::size_t off = 0;
    for (auto& p : n.parents) {
      if (p->requires_grad) {
        double* g = p->grad_buffer();
        for (std::size_t i = 0; i < p->value.size(); ++i) g[i] += n.grad[off + i];
      }
      off += p->value.size();
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
  need(r0 <= r1 && r1 <= x.rows(), "slice_rows out of range");
  const std::size_t d = x.cols();
  std::vector<double> y(x.data().begin() + static_cast<std::ptrdiff_t>(r0 * d),
                        x.data().begin() + static_cast<std::ptrdiff_t>(r1 * d));
  return make_result(r1 - r0, d, std::move(y), {x}, [r0, d](Node& n) {
    double* g = n.parents[0]->grad_buffer() + r0 * d;
    for (std::size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  const std::size_t d = x.cols();
  std::vector<double> y(idx.size() * d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    need(idx[i] < x.rows(), "gather_rows index " + std::to_string(idx[i]) + " of " + dims(x));
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d, y.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return make_result(idx.size(), d, std::move(y), {x}, [idx, d](Node& n) {
    double* g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) g[idx[i] * d + c] += n.grad[i * d + c];
  });
}

Tensor gather_mean(const Tensor& x, const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t d = x.cols();
  std::vector<double> y(groups.size() * d, 0.0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) continue;
    const double w = 1.0 / static_cast<double>(groups[i].size());
    for (auto r : groups[i]) {
      need(r < x.rows(), "gather_mean index " + std::to_string(r) + " of " + dims(x));
      for (std::size_t c = 0; c < d; ++c) y[i * d + c] += w * x.data()[r * d + c];
    }
  }
  return make_result(groups.size(), d, std::move(y), {x}, [groups, d](Node& n) {
    double* g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].empty()) continue;
      const double w = 1.0 / static_cast<double>(groups[i].size());
      for (auto r : groups[i])
        for (std::size_t c = 0; c < d; ++c) g[r * d + c] += w * n.grad[i * d + c];
    }
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  const std::size_t m = x.rows(), d = x.cols();
  std::vector<double> y(m * d), norms(m);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += x.data()[r * d + c] * x.data()[r * d + c];
    norms[r] = std::sqrt(s);
    if (!(norms[r] > 0.0)) throw ZeroNorm("row " + std::to_string(r) + " has zero norm");
    for (std::size_t c = 0; c < d; ++c) y[r * d + c] = x.data()[r * d + c] / norms[r];
  }
  return make_result(m, d, y, {x}, [y, norms = std::move(norms), m, d](Node& n) {
    double* g = n.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += y[r * d + c] * n.grad[r * d + c];
      for (std::size_t c = 0; c < d; ++c) g[r * d + c] += (n.grad[r * d + c] - y[r * d + c] * dot) / norms[r];
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result(1, 1, {s}, {x}, [](Node& n) {
    double* g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < n.parents[0]->value.size(); ++i) g[i] += n.grad[0];
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  const std::size_t m = logits.rows(), v = logits.cols();
  if (targets.size() != m)
    throw LengthMismatch(std::to_string(targets.size()) + " targets for " + std::to_string(m) + " logit rows");
  std::vector<double> probs(m * v, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= v)
      throw LengthMismatch("target " + std::to_string(targets[r]) + " outside vocabulary of " + std::to_string(v));
    const double* row = logits.data().data() + r * v;
    double mx = row[0];
    for (std::size_t c = 1; c < v; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < v; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    loss += lse - row[targets[r]];
    for (std::size_t c = 0; c < v; ++c) probs[r * v + c] = std::exp(row[c] - lse);
  }
  return make_result(1, 1, {loss}, {logits}, [probs = std::move(probs), targets, m, v](Node& n) {
    double* g = n.parents[0]->grad_buffer();
    const double up = n.grad[0];
    for (std::size_t r = 0; r < m; ++r) {
      if (targets[r] < 0) continue;
      for (std::size_t c = 0; c < v; ++c) g[r * v + c] += up * probs[r * v + c];
      g[r * v + static_cast<std::size_t>(targets[r])] -= up;
    }
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttnSegments& segs, int heads,
                 bool causal) {
  const std::size_t dm = q.cols();
  need(heads > 0 && dm % static_cast<std::size_t>(heads) == 0, "attention width not divisible by heads");
  need(k.cols() == dm && v.cols() == dm && k.rows() == v.rows(), "attention q/k/v widths");
  const std::size_t dh = dm / static_cast<std::size_t>(heads);
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto Q = view(q);
  const auto K = view(k);
  const auto V = view(v);
  Mat out = Mat::Zero(q.rows(), dm);
  std::vector<Mat> probs;
  probs.reserve(segs.count() * static_cast<std::size_t>(heads));
  for (std::size_t s = 0; s < segs.count(); ++s) {
    const auto qo = static_cast<Eigen::Index>(segs.q_off[s]);
    const auto ql = static_cast<Eigen::Index>(segs.q_len[s]);
    const auto ko = static_cast<Eigen::Index>(segs.k_off[s]);
    const auto kl = static_cast<Eigen::Index>(segs.k_len[s]);
    need(segs.q_off[s] + segs.q_len[s] <= q.rows() && segs.k_off[s] + segs.k_len[s] <= k.rows(),
         "attention segment out of range");
    need(!causal || ql == kl, "causal attention needs equal query and key lengths");
    for (int h = 0; h < heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(static_cast<std::size_t>(h) * dh);
      const auto di = static_cast<Eigen::Index>(dh);
      Mat P = (Q.block(qo, c0, ql, di) * K.block(ko, c0, kl, di).transpose()) * sc;
      for (Eigen::Index i = 0; i < ql; ++i) {
        const Eigen::Index lim = causal ? std::min(i + 1, kl) : kl;
        if (lim == 0) {
          P.row(i).setZero();
          continue;
        }
        const double mx = P.row(i).head(lim).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < lim; ++j) {
          P(i, j) = std::exp(P(i, j) - mx);
          z += P(i, j);
        }
        for (Eigen::Index j = 0; j < lim; ++j) P(i, j) /= z;
        for (Eigen::Index j = lim; j < kl; ++j) P(i, j) = 0.0;
      }
      out.block(qo, c0, ql, di).noalias() = P * V.block(ko, c0, kl, di);
      probs.push_back(std::move(P));
    }
  }
  return make_result(q.rows(), dm, to_vec(out), {q, k, v},
                     [segs, heads, dh, sc, probs = std::move(probs)](Node& n) {
                       Node& qn = *n.parents[0];
                       Node& kn = *n.parents[1];
                       Node& vn = *n.parents[2];
                       const auto Q = view(qn);
                       const auto K = view(kn);
                       const auto V = view(vn);
                       const auto G = grad_view(n);
                       Mat dQ = Mat::Zero(qn.rows, qn.cols);
                       Mat dK = Mat::Zero(kn.rows, kn.cols);
                       Mat dV = Mat::Zero(vn.rows, vn.cols);
                       std::size_t pi = 0;
                       for (std::size_t s = 0; s < segs.count(); ++s) {
                         const auto qo = static_cast<Eigen::Index>(segs.q_off[s]);
                         const auto ql = static_cast<Eigen::Index>(segs.q_len[s]);
                         const auto ko = static_cast<Eigen::Index>(segs.k_off[s]);
                         const auto kl = static_cast<Eigen::Index>(segs.k_len[s]);
                         for (int h = 0; h < heads; ++h) {
                           const Mat& P = probs[pi++];
                           const auto c0 = static_cast<Eigen::Index>(static_cast<std::size_t>(h) * dh);
                           const auto di = static_cast<Eigen::Index>(dh);
                           const auto dO = G.block(qo, c0, ql, di);
                           dV.block(ko, c0, kl, di).noalias() += P.transpose() * dO;
                           Mat dP = dO * V.block(ko, c0, kl, di).transpose();
                           const Eigen::VectorXd rs = dP.cwiseProduct(P).rowwise().sum();
                           Mat dS = P.cwiseProduct(dP.colwise() - rs);
                           dQ.block(qo, c0, ql, di).noalias() += sc * dS * K.block(ko, c0, kl, di);
                           dK.block(ko, c0, kl, di).noalias() += sc * dS.transpose() * Q.block(qo, c0, ql, di);
                         }
                       }
                       if (qn.requires_grad) grad_of(qn) += dQ;
                       if (kn.requires_grad) grad_of(kn) += dK;
                       if (vn.requires_grad) grad_of(vn) += dV;
                     });
}

}  // namespace cadkit::align
