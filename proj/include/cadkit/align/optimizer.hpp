#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cadkit/align/tensor.hpp"

namespace cadkit::align {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One update of every listed parameter from its accumulated gradient.
  void step(const std::vector<std::pair<std::string, Tensor>>& params);

  const AdamConfig& config() const { return cfg_; }
  std::size_t steps() const { return t_; }
  // moment buffers by parameter name, for checkpoints
  std::map<std::string, std::vector<double>>& first() { return m_; }
  std::map<std::string, std::vector<double>>& second() { return v_; }
  const std::map<std::string, std::vector<double>>& first() const { return m_; }
  const std::map<std::string, std::vector<double>>& second() const { return v_; }
  void set_steps(std::size_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace cadkit::align
