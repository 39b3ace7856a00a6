#include "cadkit/align/tensor.hpp"

#include <unordered_set>

namespace cadkit::align {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols)
    throw ShapeMismatch("tensor data has " + std::to_string(data.size()) + " values for shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (size() != 1) throw ShapeMismatch("item() needs a 1x1 tensor");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->grad_buffer();
  return node_->grad;
}

Tensor Tensor::detach() const { return from(rows(), cols(), data(), false); }

void Tensor::backward() const {
  if (size() != 1) throw ShapeMismatch("backward() starts from a scalar");
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
  Tensor out = Tensor::from(rows, cols, std::move(value));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  Node* n = out.node();
  n->requires_grad = true;
  for (auto& p : parents) n->parents.push_back(p.shared());
  n->backward = std::move(backward);
  return out;
}

}  // namespace cadkit::align
