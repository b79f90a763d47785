#pragma once

#include "nn/tensor.hpp"

namespace wad::nn {

// Linear warmup over the first warmup_fraction of steps, then linear decay to
// zero at total_steps.
inline double lr_at(long step, long total_steps, double base, double warmup_fraction = 0.01) {
  if (total_steps <= 0) fail(ErrorCode::ShapeMismatch, "lr_at: total_steps must be positive");
  long warm = std::max<long>(1, static_cast<long>(warmup_fraction * double(total_steps) + 0.5));
  if (warm >= total_steps) warm = std::max<long>(1, total_steps - 1);
  if (step <= 0) return 0.0;
  if (step < warm) return base * double(step) / double(warm);
  if (step >= total_steps) return 0.0;
  return base * double(total_steps - step) / double(total_steps - warm);
}

// Adam with decoupled weight decay; moments are bias-corrected.
template <class R>
class AdamWT {
 public:
  AdamWT() = default;
  AdamWT(double beta1, double beta2, double eps, double weight_decay)
      : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

  void attach(const std::vector<TensorT<R>>& params) {
    slots_.clear();
    slots_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots_[i].m.assign(params[i].size(), R(0));
      slots_[i].v.assign(params[i].size(), R(0));
    }
  }

  long step_count() const { return step_; }
  void set_step_count(long s) { step_ = s; }
  double weight_decay() const { return weight_decay_; }

  void step(std::vector<TensorT<R>>& params, double lr) {
    if (slots_.size() != params.size())
      fail(ErrorCode::ShapeMismatch, "optimizer not attached to this parameter set");
    ++step_;
    double bc1 = 1.0 - std::pow(beta1_, double(step_));
    double bc2 = 1.0 - std::pow(beta2_, double(step_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      auto& p = params[pi];
      if (p.grad().size() != p.vals().size())
        fail(ErrorCode::ShapeMismatch, "gradient missing for parameter " + std::to_string(pi));
      R* w = p.data();
      const R* g = p.grad().data();
      R* m = slots_[pi].m.data();
      R* v = slots_[pi].v.data();
      for (int64_t i = 0; i < p.size(); ++i) {
        m[i] = static_cast<R>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
        v[i] = static_cast<R>(beta2_ * v[i] + (1.0 - beta2_) * double(g[i]) * double(g[i]));
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        double update = mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * double(w[i]);
        w[i] = static_cast<R>(w[i] - lr * update);
      }
    }
  }

  struct Slot {
    std::vector<R> m, v;
  };
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8, weight_decay_ = 0.01;
  long step_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace wad::nn
