#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "nn/rng.hpp"

namespace wad::nn {

// Thread-local switch: with grads disabled, ops do not record the graph.
inline bool& grad_mode_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode_enabled()) { grad_mode_enabled() = false; }
  ~NoGradGuard() { grad_mode_enabled() = prev; }
};

template <class R>
struct NodeT {
  std::vector<int> shape;
  std::vector<R> val;
  std::vector<R> grad;  // allocated on demand, same size as val
  bool requires_grad = false;
  std::vector<std::shared_ptr<NodeT<R>>> parents;
  std::function<void(NodeT<R>&)> backward;

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), R(0));
  }
};

inline int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Reverse-mode autodiff tensor with shared storage. Value semantics on the
// handle; the node (shape, values, grad, graph edges) is shared.
template <class R>
class TensorT {
 public:
  using Node = NodeT<R>;

  TensorT() = default;
  explicit TensorT(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static TensorT zeros(std::vector<int> shape) {
    auto n = std::make_shared<Node>();
    n->val.assign(shape_size(shape), R(0));
    n->shape = std::move(shape);
    return TensorT(n);
  }

  static TensorT from(std::vector<int> shape, std::vector<R> data) {
    if (shape_size(shape) != static_cast<int64_t>(data.size()))
      fail(ErrorCode::ShapeMismatch, "tensor data does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val = std::move(data);
    return TensorT(n);
  }

  static TensorT scalar(R v) { return from({1}, {v}); }

  // Leaf parameter initialized from a truncated normal (std 0.02 by default).
  static TensorT param(std::vector<int> shape, Rng& rng, double stddev = 0.02) {
    auto t = zeros(std::move(shape));
    for (R& x : t.vals()) x = static_cast<R>(rng.trunc_normal(stddev));
    t.n_->requires_grad = true;
    return t;
  }

  static TensorT param_zeros(std::vector<int> shape) {
    auto t = zeros(std::move(shape));
    t.n_->requires_grad = true;
    return t;
  }

  bool defined() const { return n_ != nullptr; }
  const std::vector<int>& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape.at(i); }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int64_t size() const { return static_cast<int64_t>(n_->val.size()); }

  std::vector<R>& vals() { return n_->val; }
  const std::vector<R>& vals() const { return n_->val; }
  R* data() { return n_->val.data(); }
  const R* data() const { return n_->val.data(); }
  R item() const {
    if (size() != 1) fail(ErrorCode::ShapeMismatch, "item() on non-scalar " + shape_str(shape()));
    return n_->val[0];
  }

  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool b) { n_->requires_grad = b; }

  std::vector<R>& grad() {
    n_->ensure_grad();
    return n_->grad;
  }
  const std::vector<R>& grad() const { return n_->grad; }
  void zero_grad() { n_->grad.assign(n_->val.size(), R(0)); }

  std::shared_ptr<Node> node() const { return n_; }

  // Reverse accumulation from this scalar. Seeds d(this)=1 and walks the
  // recorded graph once in reverse topological order.
  void backward() {
    if (size() != 1) fail(ErrorCode::ShapeMismatch, "backward() requires a scalar loss");
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(n_.get(), 0);
    seen.insert(n_.get());
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        Node* p = node->parents[idx++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    for (Node* node : order) node->ensure_grad();
    n_->grad[0] += R(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward) (*it)->backward(**it);
  }

 private:
  std::shared_ptr<Node> n_;
};

// Builds the result node of an op: output requires grad (and records the
// graph) only when grad mode is on and some input requires it.
template <class R>
TensorT<R> make_op_result(std::vector<int> shape, std::vector<R> val,
                          std::vector<TensorT<R>> inputs,
                          std::function<void(NodeT<R>&)> backward) {
  auto out = TensorT<R>::from(std::move(shape), std::move(val));
  if (!grad_mode_enabled()) return out;
  bool needs = false;
  for (const auto& t : inputs)
    if (t.requires_grad()) needs = true;
  if (!needs) return out;
  auto node = out.node();
  node->requires_grad = true;
  node->backward = std::move(backward);
  node->parents.reserve(inputs.size());
  for (auto& t : inputs) node->parents.push_back(t.node());
  return out;
}

using Tensor = TensorT<float>;

}  // namespace wad::nn
