#pragma once

#include "nn/ops.hpp"

namespace wad::nn {

// Gated recurrent unit: z = sig(xWz + hUz + bz), r = sig(xWr + hUr + br),
// g = tanh(xWh + (r.h)Uh + bh), h' = (1-z).h + z.g
template <class R>
struct GruParamsT {
  TensorT<R> wz, wr, wh;  // [d_in, k]
  TensorT<R> uz, ur, uh;  // [k, k]
  TensorT<R> bz, br, bh;  // [k]

  static GruParamsT init(int d_in, int k, Rng& rng) {
    GruParamsT p;
    p.wz = TensorT<R>::param({d_in, k}, rng);
    p.wr = TensorT<R>::param({d_in, k}, rng);
    p.wh = TensorT<R>::param({d_in, k}, rng);
    p.uz = TensorT<R>::param({k, k}, rng);
    p.ur = TensorT<R>::param({k, k}, rng);
    p.uh = TensorT<R>::param({k, k}, rng);
    p.bz = TensorT<R>::param_zeros({k});
    p.br = TensorT<R>::param_zeros({k});
    p.bh = TensorT<R>::param_zeros({k});
    return p;
  }

  int input_width() const { return wz.dim(0); }
  int hidden_width() const { return wz.dim(1); }

  std::vector<TensorT<R>> params() const { return {wz, wr, wh, uz, ur, uh, bz, br, bh}; }
};

// One step composed from primitive ops; doubles as an independent reference
// for the fused sequence kernel.
template <class R>
TensorT<R> gru_step(const TensorT<R>& x, const TensorT<R>& h_prev, const GruParamsT<R>& p) {
  if (x.rank() != 1 || x.dim(0) != p.input_width() || h_prev.rank() != 1 ||
      h_prev.dim(0) != p.hidden_width())
    fail(ErrorCode::ShapeMismatch, "gru_step: x=" + shape_str(x.shape()) +
                                       " h=" + shape_str(h_prev.shape()));
  int k = p.hidden_width();
  auto no_bias = TensorT<R>::zeros({k});
  auto z = sigmoid_op(add(linear(x, p.wz, p.bz), linear(h_prev, p.uz, no_bias)));
  auto r = sigmoid_op(add(linear(x, p.wr, p.br), linear(h_prev, p.ur, no_bias)));
  auto g = tanh_op(add(linear(x, p.wh, p.bh), linear(mul(r, h_prev), p.uh, no_bias)));
  auto ones = TensorT<R>::from({k}, std::vector<R>(k, R(1)));
  return add(mul(sub(ones, z), h_prev), mul(z, g));
}

// Runs the recurrence over a whole sequence as one graph node (BPTT inside).
// xs is [L,d]; the result is [L,k] with states stored at sequence positions.
// reverse=true scans from the last position toward the first (h0 enters at
// position L-1).
template <class R>
TensorT<R> gru_sequence(const TensorT<R>& xs, const TensorT<R>& h0, const GruParamsT<R>& p,
                        bool reverse) {
  if (xs.rank() != 2 || xs.dim(1) != p.input_width() || h0.rank() != 1 ||
      h0.dim(0) != p.hidden_width())
    fail(ErrorCode::ShapeMismatch, "gru_sequence: xs=" + shape_str(xs.shape()) +
                                       " h0=" + shape_str(h0.shape()));
  int L = xs.dim(0), d = p.input_width(), k = p.hidden_width();

  // Input projections for all positions at once.
  auto project = [&](const TensorT<R>& w, const TensorT<R>& b) {
    std::vector<R> m(static_cast<std::size_t>(L) * k);
    for (int t = 0; t < L; ++t)
      std::copy_n(b.data(), k, m.begin() + static_cast<std::size_t>(t) * k);
    gemm_nn(xs.data(), w.data(), m.data(), L, d, k);
    return m;
  };
  std::vector<R> xz = project(p.wz, p.bz);
  std::vector<R> xr = project(p.wr, p.br);
  std::vector<R> xh = project(p.wh, p.bh);

  auto Z = std::make_shared<std::vector<R>>(static_cast<std::size_t>(L) * k);
  auto Rr = std::make_shared<std::vector<R>>(static_cast<std::size_t>(L) * k);
  auto G = std::make_shared<std::vector<R>>(static_cast<std::size_t>(L) * k);
  std::vector<R> states(static_cast<std::size_t>(L) * k);

  std::vector<R> az(k), ar(k), ah(k), rh(k);
  const R* prev = h0.data();
  for (int step = 0; step < L; ++step) {
    int t = reverse ? L - 1 - step : step;
    std::size_t off = static_cast<std::size_t>(t) * k;
    std::copy_n(xz.begin() + off, k, az.begin());
    std::copy_n(xr.begin() + off, k, ar.begin());
    gemm_nn(prev, p.uz.data(), az.data(), 1, k, k);
    gemm_nn(prev, p.ur.data(), ar.data(), 1, k, k);
    R* z = Z->data() + off;
    R* r = Rr->data() + off;
    R* g = G->data() + off;
    for (int j = 0; j < k; ++j) {
      z[j] = R(1) / (R(1) + std::exp(-az[j]));
      r[j] = R(1) / (R(1) + std::exp(-ar[j]));
      rh[j] = r[j] * prev[j];
    }
    std::copy_n(xh.begin() + off, k, ah.begin());
    gemm_nn(rh.data(), p.uh.data(), ah.data(), 1, k, k);
    R* h = states.data() + off;
    for (int j = 0; j < k; ++j) {
      g[j] = std::tanh(ah[j]);
      h[j] = (R(1) - z[j]) * prev[j] + z[j] * g[j];
    }
    prev = h;
  }

  auto xsn = xs.node();
  auto h0n = h0.node();
  GruParamsT<R> pc = p;  // capture parameter handles
  return make_op_result<R>(
      {L, k}, std::move(states),
      {xs, h0, p.wz, p.wr, p.wh, p.uz, p.ur, p.uh, p.bz, p.br, p.bh},
      [xsn, h0n, pc, Z, Rr, G, L, d, k, reverse](NodeT<R>& nd) {
        std::vector<R> dxz(static_cast<std::size_t>(L) * k, R(0));
        std::vector<R> dxr(static_cast<std::size_t>(L) * k, R(0));
        std::vector<R> dxh(static_cast<std::size_t>(L) * k, R(0));
        std::vector<R> carry(k, R(0));
        std::vector<R> dh(k), dah(k), drh(k), daz(k), dar(k), rh(k);

        auto un = pc.uz.node();
        auto urn = pc.ur.node();
        auto uhn = pc.uh.node();
        bool need_u = un->requires_grad;
        if (need_u) {
          un->ensure_grad();
          urn->ensure_grad();
          uhn->ensure_grad();
        }

        for (int step = L - 1; step >= 0; --step) {
          int t = reverse ? L - 1 - step : step;
          std::size_t off = static_cast<std::size_t>(t) * k;
          // previous state in computation order
          const R* prev;
          if (step == 0)
            prev = h0n->val.data();
          else {
            int tp = reverse ? t + 1 : t - 1;
            prev = nd.val.data() + static_cast<std::size_t>(tp) * k;
          }
          const R* z = Z->data() + off;
          const R* r = Rr->data() + off;
          const R* g = G->data() + off;
          for (int j = 0; j < k; ++j) dh[j] = nd.grad[off + j] + carry[j];

          for (int j = 0; j < k; ++j) {
            R dz = dh[j] * (g[j] - prev[j]);
            R dg = dh[j] * z[j];
            carry[j] = dh[j] * (R(1) - z[j]);  // reused as dprev accumulator
            dah[j] = dg * (R(1) - g[j] * g[j]);
            daz[j] = dz * z[j] * (R(1) - z[j]);
            rh[j] = r[j] * prev[j];
          }
          // through Uh and the reset gate
          std::fill(drh.begin(), drh.end(), R(0));
          gemm_nt(dah.data(), uhn->val.data(), drh.data(), 1, k, k);
          for (int j = 0; j < k; ++j) {
            R dr = drh[j] * prev[j];
            carry[j] += drh[j] * r[j];
            dar[j] = dr * r[j] * (R(1) - r[j]);
          }
          if (need_u) {
            gemm_tn(prev, daz.data(), un->grad.data(), k, 1, k);
            gemm_tn(prev, dar.data(), urn->grad.data(), k, 1, k);
            gemm_tn(rh.data(), dah.data(), uhn->grad.data(), k, 1, k);
          }
          gemm_nt(daz.data(), un->val.data(), carry.data(), 1, k, k);
          gemm_nt(dar.data(), urn->val.data(), carry.data(), 1, k, k);
          std::copy_n(daz.begin(), k, dxz.begin() + off);
          std::copy_n(dar.begin(), k, dxr.begin() + off);
          std::copy_n(dah.begin(), k, dxh.begin() + off);
        }

        if (h0n->requires_grad) {
          h0n->ensure_grad();
          for (int j = 0; j < k; ++j) h0n->grad[j] += carry[j];
        }
        auto add_w = [&](TensorT<R> w, TensorT<R> b, std::vector<R>& dx_proj) {
          auto wn = w.node();
          auto bn = b.node();
          if (wn->requires_grad) {
            wn->ensure_grad();
            gemm_tn(xsn->val.data(), dx_proj.data(), wn->grad.data(), d, L, k);
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            for (int t = 0; t < L; ++t)
              for (int j = 0; j < k; ++j) bn->grad[j] += dx_proj[static_cast<std::size_t>(t) * k + j];
          }
          if (xsn->requires_grad) {
            xsn->ensure_grad();
            gemm_nt(dx_proj.data(), wn->val.data(), xsn->grad.data(), L, k, d);
          }
        };
        add_w(pc.wz, pc.bz, dxz);
        add_w(pc.wr, pc.br, dxr);
        add_w(pc.wh, pc.bh, dxh);
      });
}

}  // namespace wad::nn
