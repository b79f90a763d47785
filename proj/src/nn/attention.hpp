#pragma once

#include "nn/ops.hpp"

namespace wad::nn {

template <class R>
struct MhaParamsT {
  TensorT<R> wq, wk, wv, wo;  // [d,d]
  TensorT<R> bq, bk, bv, bo;  // [d]
  int heads = 1;

  static MhaParamsT init(int d, int heads, Rng& rng) {
    if (heads < 1 || d % heads != 0)
      fail(ErrorCode::ShapeMismatch,
           "attention heads must divide width: d=" + std::to_string(d) +
               " heads=" + std::to_string(heads));
    MhaParamsT p;
    p.heads = heads;
    p.wq = TensorT<R>::param({d, d}, rng);
    p.wk = TensorT<R>::param({d, d}, rng);
    p.wv = TensorT<R>::param({d, d}, rng);
    p.wo = TensorT<R>::param({d, d}, rng);
    p.bq = TensorT<R>::param_zeros({d});
    p.bk = TensorT<R>::param_zeros({d});
    p.bv = TensorT<R>::param_zeros({d});
    p.bo = TensorT<R>::param_zeros({d});
    return p;
  }

  int width() const { return wq.dim(0); }
  int head_size() const { return width() / heads; }

  std::vector<TensorT<R>> params() const { return {wq, wk, wv, wo, bq, bk, bv, bo}; }
};

template <class R>
struct MhaOutputT {
  TensorT<R> out;          // [n,d]
  std::vector<R> weights;  // attention probabilities, [heads, n, n]
  int heads = 0;
  int n = 0;

  R weight(int h, int i, int j) const {
    return weights[(static_cast<std::size_t>(h) * n + i) * n + j];
  }
};

// Scaled dot-product attention over row sets, fused into a single graph node.
// Rows of every head's weight matrix sum to 1; key_mask (0 = masked) removes
// columns before the softmax. The op adds no positional information, so
// permuting input rows permutes output rows and conjugates the weights.
template <class R>
MhaOutputT<R> multi_head_attention(const TensorT<R>& q_in, const TensorT<R>& k_in,
                                   const TensorT<R>& v_in, const MhaParamsT<R>& p,
                                   const std::vector<uint8_t>* key_mask = nullptr) {
  int d = p.width();
  if (q_in.rank() != 2 || q_in.dim(1) != d || k_in.rank() != 2 || k_in.dim(1) != d ||
      v_in.rank() != 2 || v_in.dim(1) != d || k_in.dim(0) != v_in.dim(0))
    fail(ErrorCode::ShapeMismatch, "attention: q=" + shape_str(q_in.shape()) +
                                       " k=" + shape_str(k_in.shape()) +
                                       " v=" + shape_str(v_in.shape()));
  int n = q_in.dim(0);
  int m = k_in.dim(0);
  if (key_mask && static_cast<int>(key_mask->size()) != m)
    fail(ErrorCode::ShapeMismatch, "attention key mask length mismatch");
  int H = p.heads, dh = p.head_size();
  double scale = 1.0 / std::sqrt(double(dh));

  auto project = [&](const TensorT<R>& x, const TensorT<R>& w, const TensorT<R>& b, int rows) {
    auto buf = std::make_shared<std::vector<R>>(static_cast<std::size_t>(rows) * d);
    for (int i = 0; i < rows; ++i)
      std::copy_n(b.data(), d, buf->begin() + static_cast<std::size_t>(i) * d);
    gemm_nn(x.data(), w.data(), buf->data(), rows, d, d);
    return buf;
  };
  auto Q = project(q_in, p.wq, p.bq, n);
  auto K = project(k_in, p.wk, p.bk, m);
  auto V = project(v_in, p.wv, p.bv, m);

  auto A = std::make_shared<std::vector<R>>(static_cast<std::size_t>(H) * n * m);
  auto O = std::make_shared<std::vector<R>>(static_cast<std::size_t>(n) * d, R(0));

  for (int h = 0; h < H; ++h) {
    int c0 = h * dh;
    for (int i = 0; i < n; ++i) {
      const R* qi = Q->data() + static_cast<std::size_t>(i) * d + c0;
      R* arow = A->data() + (static_cast<std::size_t>(h) * n + i) * m;
      double mx = -1e300;
      for (int j = 0; j < m; ++j) {
        if (key_mask && !(*key_mask)[j]) {
          arow[j] = R(0);
          continue;
        }
        const R* kj = K->data() + static_cast<std::size_t>(j) * d + c0;
        double s = 0;
        for (int c = 0; c < dh; ++c) s += double(qi[c]) * double(kj[c]);
        s *= scale;
        arow[j] = static_cast<R>(s);
        if (s > mx) mx = s;
      }
      double sum = 0;
      for (int j = 0; j < m; ++j) {
        if (key_mask && !(*key_mask)[j]) continue;
        double e = std::exp(double(arow[j]) - mx);
        arow[j] = static_cast<R>(e);
        sum += e;
      }
      for (int j = 0; j < m; ++j)
        if (!key_mask || (*key_mask)[j]) arow[j] = static_cast<R>(double(arow[j]) / sum);
      // O rows, head slice
      R* oi = O->data() + static_cast<std::size_t>(i) * d + c0;
      for (int j = 0; j < m; ++j) {
        R a = arow[j];
        if (a == R(0)) continue;
        const R* vj = V->data() + static_cast<std::size_t>(j) * d + c0;
        for (int c = 0; c < dh; ++c) oi[c] += a * vj[c];
      }
    }
  }

  std::vector<R> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) std::copy_n(p.bo.data(), d, out.begin() + static_cast<std::size_t>(i) * d);
  gemm_nn(O->data(), p.wo.data(), out.data(), n, d, d);

  MhaOutputT<R> res;
  res.weights.assign(A->begin(), A->end());
  res.heads = H;
  res.n = n;

  auto qn = q_in.node(), kn = k_in.node(), vn = v_in.node();
  MhaParamsT<R> pc = p;
  res.out = make_op_result<R>(
      {n, d}, std::move(out),
      {q_in, k_in, v_in, p.wq, p.wk, p.wv, p.wo, p.bq, p.bk, p.bv, p.bo},
      [qn, kn, vn, pc, Q, K, V, A, O, n, m, d, H, dh, scale](NodeT<R>& nd) {
        auto won = pc.wo.node();
        auto bon = pc.bo.node();
        // through the output projection
        std::vector<R> dO(static_cast<std::size_t>(n) * d, R(0));
        gemm_nt(nd.grad.data(), won->val.data(), dO.data(), n, d, d);
        if (won->requires_grad) {
          won->ensure_grad();
          gemm_tn(O->data(), nd.grad.data(), won->grad.data(), d, n, d);
        }
        if (bon->requires_grad) {
          bon->ensure_grad();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) bon->grad[j] += nd.grad[static_cast<std::size_t>(i) * d + j];
        }

        std::vector<R> dQ(static_cast<std::size_t>(n) * d, R(0));
        std::vector<R> dK(static_cast<std::size_t>(m) * d, R(0));
        std::vector<R> dV(static_cast<std::size_t>(m) * d, R(0));
        std::vector<R> dArow(m), dSrow(m);

        for (int h = 0; h < H; ++h) {
          int c0 = h * dh;
          for (int i = 0; i < n; ++i) {
            const R* arow = A->data() + (static_cast<std::size_t>(h) * n + i) * m;
            const R* doi = dO.data() + static_cast<std::size_t>(i) * d + c0;
            // dA = dOh . Vh^T ; dVh += a * dOh
            for (int j = 0; j < m; ++j) {
              const R* vj = V->data() + static_cast<std::size_t>(j) * d + c0;
              double acc = 0;
              for (int c = 0; c < dh; ++c) acc += double(doi[c]) * double(vj[c]);
              dArow[j] = static_cast<R>(acc);
              R a = arow[j];
              if (a != R(0)) {
                R* dvj = dV.data() + static_cast<std::size_t>(j) * d + c0;
                for (int c = 0; c < dh; ++c) dvj[c] += a * doi[c];
              }
            }
            // softmax backward on the row
            double dot = 0;
            for (int j = 0; j < m; ++j) dot += double(arow[j]) * double(dArow[j]);
            for (int j = 0; j < m; ++j)
              dSrow[j] = static_cast<R>(double(arow[j]) * (double(dArow[j]) - dot) * scale);
            // dQh += dS . Kh ; dKh += dS^T . Qh
            const R* qi = Q->data() + static_cast<std::size_t>(i) * d + c0;
            R* dqi = dQ.data() + static_cast<std::size_t>(i) * d + c0;
            for (int j = 0; j < m; ++j) {
              R s = dSrow[j];
              if (s == R(0)) continue;
              const R* kj = K->data() + static_cast<std::size_t>(j) * d + c0;
              R* dkj = dK.data() + static_cast<std::size_t>(j) * d + c0;
              for (int c = 0; c < dh; ++c) {
                dqi[c] += s * kj[c];
                dkj[c] += s * qi[c];
              }
            }
          }
        }

        auto through_proj = [&](std::shared_ptr<NodeT<R>> xn, const TensorT<R>& w,
                                const TensorT<R>& b, std::vector<R>& dproj, int rows) {
          auto wn = w.node();
          auto bn = b.node();
          if (wn->requires_grad) {
            wn->ensure_grad();
            gemm_tn(xn->val.data(), dproj.data(), wn->grad.data(), d, rows, d);
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            for (int i = 0; i < rows; ++i)
              for (int j = 0; j < d; ++j) bn->grad[j] += dproj[static_cast<std::size_t>(i) * d + j];
          }
          if (xn->requires_grad) {
            xn->ensure_grad();
            gemm_nt(dproj.data(), wn->val.data(), xn->grad.data(), rows, d, d);
          }
        };
        through_proj(qn, pc.wq, pc.bq, dQ, n);
        through_proj(kn, pc.wk, pc.bk, dK, m);
        through_proj(vn, pc.wv, pc.bv, dV, m);
      });
  return res;
}

}  // namespace wad::nn
