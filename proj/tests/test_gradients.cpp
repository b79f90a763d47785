// Finite-difference gradient checks. These run on the double instantiation of
// the kernels: float forward noise sits above the 1e-4 acceptance band.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nn/attention.hpp"
#include "nn/grad_check.hpp"
#include "nn/gru.hpp"
#include "nn/transformer.hpp"

using namespace wad::nn;

using T = TensorT<double>;

namespace {

T randn(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  auto t = T::zeros(std::move(shape));
  for (auto& x : t.vals()) x = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("grad_check agrees with analytic derivative of x^2") {
  auto x = T::from({1}, {3.0});
  auto err = grad_check<double>([&]() { return mul(x, x); }, {x}, 1e-3);
  CHECK(err < 1e-6);
}

TEST_CASE("linear layer gradients") {
  Rng rng(101);
  auto x = randn({3, 4}, rng);
  auto w = randn({4, 5}, rng);
  auto b = randn({5}, rng);
  auto err = grad_check<double>([&]() { return sum_all(tanh_op(linear(x, w, b))); }, {x, w, b}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("matmul gradients") {
  Rng rng(102);
  auto a = randn({3, 4}, rng);
  auto b = randn({4, 2}, rng);
  auto err = grad_check<double>([&]() { return sum_all(tanh_op(matmul(a, b))); }, {a, b}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("softmax + cross entropy gradients") {
  Rng rng(103);
  auto logits = randn({4}, rng, 2.0);
  auto err = grad_check<double>([&]() { return cross_entropy(softmax_rows(logits), 2); },
                                {logits}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("layer norm gradients") {
  Rng rng(104);
  auto x = randn({3, 8}, rng, 2.0);
  auto g = randn({8}, rng, 0.5);
  auto b = randn({8}, rng, 0.5);
  auto err = grad_check<double>(
      [&]() { return sum_all(tanh_op(layer_norm_rows(x, g, b))); }, {x, g, b}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("gelu gradients") {
  Rng rng(105);
  auto x = randn({10}, rng, 2.0);
  auto err = grad_check<double>([&]() { return sum_all(gelu(x)); }, {x}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("embedding gradients") {
  Rng rng(106);
  auto table = randn({7, 4}, rng);
  std::vector<int> ids{1, 3, 3, 0};
  auto err = grad_check<double>(
      [&]() { return sum_all(tanh_op(embedding_rows(table, ids))); }, {table}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("gru step gradients") {
  Rng rng(107);
  int d = 5, k = 4;
  auto p = GruParamsT<double>::init(d, k, rng);
  // non-trivial weights
  for (auto& t : p.params())
    for (auto& v : t.vals()) v = rng.normal() * 0.4;
  auto x = randn({d}, rng);
  auto h = randn({k}, rng);
  std::vector<T> inputs{x, h};
  auto all = p.params();
  inputs.insert(inputs.end(), all.begin(), all.end());
  auto err = grad_check<double>([&]() { return sum_all(tanh_op(gru_step(x, h, p))); }, inputs, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("fused gru sequence gradients, both directions") {
  Rng rng(108);
  int L = 5, d = 3, k = 4;
  auto p = GruParamsT<double>::init(d, k, rng);
  for (auto& t : p.params())
    for (auto& v : t.vals()) v = rng.normal() * 0.4;
  auto xs = randn({L, d}, rng);
  auto h0 = randn({k}, rng);
  for (bool reverse : {false, true}) {
    std::vector<T> inputs{xs, h0};
    auto all = p.params();
    inputs.insert(inputs.end(), all.begin(), all.end());
    auto err = grad_check<double>(
        [&]() { return sum_all(tanh_op(gru_sequence(xs, h0, p, reverse))); }, inputs, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("multi-head attention gradients") {
  Rng rng(109);
  int n = 4, d = 8;
  auto p = MhaParamsT<double>::init(d, 2, rng);
  for (auto& t : p.params())
    for (auto& v : t.vals()) v = rng.normal() * 0.3;
  auto x = randn({n, d}, rng);
  std::vector<T> inputs{x};
  auto all = p.params();
  inputs.insert(inputs.end(), all.begin(), all.end());
  auto err = grad_check<double>(
      [&]() { return sum_all(tanh_op(multi_head_attention(x, x, x, p).out)); }, inputs, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("cross attention gradients with distinct q/k/v") {
  Rng rng(110);
  int n = 3, m = 5, d = 6;
  auto p = MhaParamsT<double>::init(d, 3, rng);
  for (auto& t : p.params())
    for (auto& v : t.vals()) v = rng.normal() * 0.3;
  auto q = randn({n, d}, rng);
  auto k = randn({m, d}, rng);
  auto v = randn({m, d}, rng);
  auto err = grad_check<double>(
      [&]() { return sum_all(tanh_op(multi_head_attention(q, k, v, p).out)); }, {q, k, v}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("transformer layer gradients") {
  Rng rng(111);
  int n = 2, d = 8;
  auto p = TransformerLayerParamsT<double>::init(d, 2, 16, rng);
  auto x = randn({n, d}, rng);
  std::vector<T> inputs{x};
  auto all = p.params();
  inputs.insert(inputs.end(), all.begin(), all.end());
  auto err = grad_check<double>(
      [&]() { return sum_all(tanh_op(transformer_layer(x, p, 0.0, rng, false))); }, inputs, 1e-4);
  CHECK(err < 1e-4);
}

TEST_CASE("dropout backward matches its mask") {
  Rng rng(112);
  auto x = randn({50}, rng);
  x.set_requires_grad(true);
  x.zero_grad();
  Rng drop_rng(99);
  auto y = dropout(x, 0.4, drop_rng, true);
  auto loss = sum_all(y);
  loss.backward();
  for (int i = 0; i < 50; ++i) {
    double m = y.vals()[i] == 0.0 && x.vals()[i] != 0.0 ? 0.0 : 1.0 / 0.6;
    CHECK(x.grad()[i] == doctest::Approx(m).epsilon(1e-9));
  }
}
