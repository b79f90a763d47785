#pragma once

#include "nn/attention.hpp"

namespace wad::nn {

// Post-norm encoder layer: LN(x + MHA(x)) then LN(. + FFN(.)).
template <class R>
struct TransformerLayerParamsT {
  MhaParamsT<R> attn;
  TensorT<R> w1, b1;  // [d, intermediate]
  TensorT<R> w2, b2;  // [intermediate, d]
  TensorT<R> ln1_g, ln1_b, ln2_g, ln2_b;

  static TransformerLayerParamsT init(int d, int heads, int intermediate, Rng& rng) {
    TransformerLayerParamsT p;
    p.attn = MhaParamsT<R>::init(d, heads, rng);
    p.w1 = TensorT<R>::param({d, intermediate}, rng);
    p.b1 = TensorT<R>::param_zeros({intermediate});
    p.w2 = TensorT<R>::param({intermediate, d}, rng);
    p.b2 = TensorT<R>::param_zeros({d});
    p.ln1_g = TensorT<R>::from({d}, std::vector<R>(d, R(1)));
    p.ln1_g.set_requires_grad(true);
    p.ln1_b = TensorT<R>::param_zeros({d});
    p.ln2_g = TensorT<R>::from({d}, std::vector<R>(d, R(1)));
    p.ln2_g.set_requires_grad(true);
    p.ln2_b = TensorT<R>::param_zeros({d});
    return p;
  }

  int width() const { return attn.width(); }

  std::vector<TensorT<R>> params() const {
    auto v = attn.params();
    for (const auto& t : {w1, b1, w2, b2, ln1_g, ln1_b, ln2_g, ln2_b}) v.push_back(t);
    return v;
  }
};

template <class R>
struct LayerOutputT {
  TensorT<R> out;
  std::vector<R> attn_weights;  // [heads, n, n]
  int heads = 0;
  int n = 0;
};

template <class R>
LayerOutputT<R> transformer_layer_with_weights(const TensorT<R>& x,
                                               const TransformerLayerParamsT<R>& p,
                                               double dropout_rate, Rng& rng, bool training,
                                               const std::vector<uint8_t>* key_mask = nullptr) {
  auto mha = multi_head_attention(x, x, x, p.attn, key_mask);
  auto a = dropout(mha.out, dropout_rate, rng, training);
  auto h = layer_norm_rows(add(x, a), p.ln1_g, p.ln1_b);
  auto f = linear(gelu(linear(h, p.w1, p.b1)), p.w2, p.b2);
  f = dropout(f, dropout_rate, rng, training);
  LayerOutputT<R> out;
  out.out = layer_norm_rows(add(h, f), p.ln2_g, p.ln2_b);
  out.attn_weights = std::move(mha.weights);
  out.heads = mha.heads;
  out.n = mha.n;
  return out;
}

template <class R>
TensorT<R> transformer_layer(const TensorT<R>& x, const TransformerLayerParamsT<R>& p,
                             double dropout_rate, Rng& rng, bool training,
                             const std::vector<uint8_t>* key_mask = nullptr) {
  return transformer_layer_with_weights(x, p, dropout_rate, rng, training, key_mask).out;
}

}  // namespace wad::nn
