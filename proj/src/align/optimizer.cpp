#include "cadkit/align/optimizer.hpp"

#include <cmath>

namespace cadkit::align {

void Adam::step(const std::vector<std::pair<std::string, Tensor>>& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, p] : params) {
    Node* n = p.node();
    const std::size_t size = n->value.size();
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != size) m.assign(size, 0.0);
    if (v.size() != size) v.assign(size, 0.0);
    const double* g = n->grad_buffer();
    for (std::size_t i = 0; i < size; ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      n->value[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

}  // namespace cadkit::align
