#pragma once

#include <functional>

#include "nn/tensor.hpp"

namespace wad::nn {

// Central finite differences against reverse-mode gradients.
//
// make_loss must rebuild the graph from the current values of `inputs` on
// every call and return a scalar. Returns the max relative error
// |g_a - g_n| / max(|g_a| + |g_n|, floor) over every element of every input.
template <class R>
double grad_check(const std::function<TensorT<R>()>& make_loss, std::vector<TensorT<R>> inputs,
                  R eps, double denom_floor = 1e-3) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  auto loss = make_loss();
  loss.backward();
  std::vector<std::vector<R>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) analytic.push_back(t.grad());

  double worst = 0.0;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& t = inputs[ti];
    for (int64_t i = 0; i < t.size(); ++i) {
      R saved = t.data()[i];
      double fp, fm;
      {
        NoGradGuard ng;
        t.data()[i] = saved + eps;
        fp = make_loss().item();
        t.data()[i] = saved - eps;
        fm = make_loss().item();
      }
      t.data()[i] = saved;
      double numeric = (fp - fm) / (2.0 * double(eps));
      double a = analytic[ti][i];
      double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), denom_floor);
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace wad::nn
