#pragma once

#include <cmath>
#include <cstdint>

#include "nn/tensor.hpp"

namespace wad::nn {

// ---- raw kernels (row-major, accumulate into C) ----

// C[m,n] += A[m,k] * B[k,n]
template <class R>
void gemm_nn(const R* A, const R* B, R* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const R* a = A + static_cast<std::size_t>(i) * k;
    R* c = C + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      R av = a[p];
      if (av == R(0)) continue;
      const R* b = B + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <class R>
void gemm_nt(const R* A, const R* B, R* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const R* a = A + static_cast<std::size_t>(i) * k;
    R* c = C + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const R* b = B + static_cast<std::size_t>(j) * k;
      R acc = R(0);
      for (int p = 0; p < k; ++p) acc += a[p] * b[p];
      c[j] += acc;
    }
  }
}

// C[m,n] += A[k,m]^T * B[k,n]
template <class R>
void gemm_tn(const R* A, const R* B, R* C, int m, int k, int n) {
  for (int p = 0; p < k; ++p) {
    const R* a = A + static_cast<std::size_t>(p) * m;
    const R* b = B + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      R av = a[i];
      if (av == R(0)) continue;
      R* c = C + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

namespace detail {
template <class R>
void check_same_shape(const TensorT<R>& a, const TensorT<R>& b, const char* op) {
  if (a.shape() != b.shape())
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                                       shape_str(b.shape()));
}
}  // namespace detail

// ---- elementwise ----

template <class R>
TensorT<R> add(const TensorT<R>& a, const TensorT<R>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<R> out(a.size());
  const R* pa = a.data();
  const R* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] + pb[i];
  auto an = a.node(), bn = b.node();
  return make_op_result<R>(a.shape(), std::move(out), {a, b}, [an, bn](NodeT<R>& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
    }
  });
}

template <class R>
TensorT<R> sub(const TensorT<R>& a, const TensorT<R>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto an = a.node(), bn = b.node();
  return make_op_result<R>(a.shape(), std::move(out), {a, b}, [an, bn](NodeT<R>& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
    }
  });
}

template <class R>
TensorT<R> mul(const TensorT<R>& a, const TensorT<R>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto an = a.node(), bn = b.node();
  return make_op_result<R>(a.shape(), std::move(out), {a, b}, [an, bn](NodeT<R>& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->val[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i] * an->val[i];
    }
  });
}

template <class R>
TensorT<R> scale(const TensorT<R>& a, R c) {
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] * c;
  auto an = a.node();
  return make_op_result<R>(a.shape(), std::move(out), {a}, [an, c](NodeT<R>& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * c;
  });
}

template <class R>
TensorT<R> tanh_op(const TensorT<R>& a) {
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a.data()[i]);
  auto an = a.node();
  return make_op_result<R>(a.shape(), std::move(out), {a}, [an](NodeT<R>& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * (R(1) - n.val[i] * n.val[i]);
  });
}

template <class R>
TensorT<R> sigmoid_op(const TensorT<R>& a) {
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = R(1) / (R(1) + std::exp(-a.data()[i]));
  auto an = a.node();
  return make_op_result<R>(a.shape(), std::move(out), {a}, [an](NodeT<R>& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * n.val[i] * (R(1) - n.val[i]);
  });
}

// Exact GELU: x * Phi(x).
template <class R>
TensorT<R> gelu(const TensorT<R>& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  std::vector<R> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) {
    double x = a.data()[i];
    out[i] = static_cast<R>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
  }
  auto an = a.node();
  return make_op_result<R>(a.shape(), std::move(out), {a}, [an](NodeT<R>& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      double x = an->val[i];
      double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      double dens = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      an->grad[i] += n.grad[i] * static_cast<R>(phi + x * dens);
    }
  });
}

// ---- linear algebra ----

template <class R>
TensorT<R> matmul(const TensorT<R>& a, const TensorT<R>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    fail(ErrorCode::ShapeMismatch,
         "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<R> out(static_cast<std::size_t>(m) * n, R(0));
  gemm_nn(a.data(), b.data(), out.data(), m, k, n);
  auto an = a.node(), bn = b.node();
  return make_op_result<R>({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](NodeT<R>& nd) {
    if (an->requires_grad) {
      an->ensure_grad();
      gemm_nt(nd.grad.data(), bn->val.data(), an->grad.data(), m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      gemm_tn(an->val.data(), nd.grad.data(), bn->grad.data(), k, m, n);
    }
  });
}

// y = x*W + b with x either [n,d_in] or [d_in].
template <class R>
TensorT<R> linear(const TensorT<R>& x, const TensorT<R>& w, const TensorT<R>& b) {
  bool vec = x.rank() == 1;
  int n = vec ? 1 : x.dim(0);
  int din = vec ? x.dim(0) : x.dim(1);
  if (w.rank() != 2 || w.dim(0) != din || b.rank() != 1 || b.dim(0) != w.dim(1))
    fail(ErrorCode::ShapeMismatch, "linear: x=" + shape_str(x.shape()) +
                                       " W=" + shape_str(w.shape()) + " b=" + shape_str(b.shape()));
  int dout = w.dim(1);
  std::vector<R> out(static_cast<std::size_t>(n) * dout);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dout; ++j) out[static_cast<std::size_t>(i) * dout + j] = b.data()[j];
  gemm_nn(x.data(), w.data(), out.data(), n, din, dout);
  std::vector<int> out_shape = vec ? std::vector<int>{dout} : std::vector<int>{n, dout};
  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_op_result<R>(std::move(out_shape), std::move(out), {x, w, b},
                           [xn, wn, bn, n, din, dout](NodeT<R>& nd) {
                             if (xn->requires_grad) {
                               xn->ensure_grad();
                               gemm_nt(nd.grad.data(), wn->val.data(), xn->grad.data(), n, dout, din);
                             }
                             if (wn->requires_grad) {
                               wn->ensure_grad();
                               gemm_tn(xn->val.data(), nd.grad.data(), wn->grad.data(), din, n, dout);
                             }
                             if (bn->requires_grad) {
                               bn->ensure_grad();
                               for (int i = 0; i < n; ++i)
                                 for (int j = 0; j < dout; ++j)
                                   bn->grad[j] += nd.grad[static_cast<std::size_t>(i) * dout + j];
                             }
                           });
}

// ---- shape / selection ----

template <class R>
TensorT<R> row(const TensorT<R>& x, int i) {
  if (x.rank() != 2 || i < 0 || i >= x.dim(0))
    fail(ErrorCode::ShapeMismatch, "row " + std::to_string(i) + " of " + shape_str(x.shape()));
  int d = x.dim(1);
  std::vector<R> out(x.data() + static_cast<std::size_t>(i) * d,
                     x.data() + static_cast<std::size_t>(i + 1) * d);
  auto xn = x.node();
  return make_op_result<R>({d}, std::move(out), {x}, [xn, i, d](NodeT<R>& nd) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int j = 0; j < d; ++j) xn->grad[static_cast<std::size_t>(i) * d + j] += nd.grad[j];
  });
}

template <class R>
TensorT<R> mean_rows(const TensorT<R>& x) {
  if (x.rank() != 2) fail(ErrorCode::ShapeMismatch, "mean_rows on " + shape_str(x.shape()));
  int n = x.dim(0), d = x.dim(1);
  std::vector<R> out(d, R(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[j] += x.data()[static_cast<std::size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) out[j] /= R(n);
  auto xn = x.node();
  return make_op_result<R>({d}, std::move(out), {x}, [xn, n, d](NodeT<R>& nd) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    R inv = R(1) / R(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) xn->grad[static_cast<std::size_t>(i) * d + j] += nd.grad[j] * inv;
  });
}

template <class R>
TensorT<R> stack_rows(const std::vector<TensorT<R>>& rows) {
  if (rows.empty()) fail(ErrorCode::ShapeMismatch, "stack_rows: empty input");
  int d = rows[0].dim(0);
  int n = static_cast<int>(rows.size());
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(n) * d);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.dim(0) != d)
      fail(ErrorCode::ShapeMismatch, "stack_rows: inconsistent row " + shape_str(r.shape()));
    out.insert(out.end(), r.data(), r.data() + d);
  }
  std::vector<std::shared_ptr<NodeT<R>>> nodes;
  for (const auto& r : rows) nodes.push_back(r.node());
  return make_op_result<R>({n, d}, std::move(out), rows, [nodes, d](NodeT<R>& nd) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->requires_grad) continue;
      nodes[i]->ensure_grad();
      for (int j = 0; j < d; ++j) nodes[i]->grad[j] += nd.grad[i * d + j];
    }
  });
}

// Concatenates 2-D blocks along the row axis.
template <class R>
TensorT<R> concat_rows(const std::vector<TensorT<R>>& blocks) {
  if (blocks.empty()) fail(ErrorCode::ShapeMismatch, "concat_rows: empty input");
  int d = blocks[0].dim(blocks[0].rank() - 1);
  int n = 0;
  for (const auto& b : blocks) {
    if (b.rank() != 2 || b.dim(1) != d)
      fail(ErrorCode::ShapeMismatch, "concat_rows: inconsistent block " + shape_str(b.shape()));
    n += b.dim(0);
  }
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(n) * d);
  for (const auto& b : blocks) out.insert(out.end(), b.data(), b.data() + b.size());
  std::vector<std::shared_ptr<NodeT<R>>> nodes;
  std::vector<int> rows;
  for (const auto& b : blocks) {
    nodes.push_back(b.node());
    rows.push_back(b.dim(0));
  }
  return make_op_result<R>({n, d}, std::move(out), blocks, [nodes, rows, d](NodeT<R>& nd) {
    std::size_t off = 0;
    for (std::size_t bi = 0; bi < nodes.size(); ++bi) {
      std::size_t count = static_cast<std::size_t>(rows[bi]) * d;
      if (nodes[bi]->requires_grad) {
        nodes[bi]->ensure_grad();
        for (std::size_t i = 0; i < count; ++i) nodes[bi]->grad[i] += nd.grad[off + i];
      }
      off += count;
    }
  });
}

template <class R>
TensorT<R> concat(const TensorT<R>& a, const TensorT<R>& b) {
  if (a.rank() != 1 || b.rank() != 1)
    fail(ErrorCode::ShapeMismatch, "concat expects vectors");
  int p = a.dim(0), q = b.dim(0);
  std::vector<R> out;
  out.reserve(p + q);
  out.insert(out.end(), a.data(), a.data() + p);
  out.insert(out.end(), b.data(), b.data() + q);
  auto an = a.node(), bn = b.node();
  return make_op_result<R>({p + q}, std::move(out), {a, b}, [an, bn, p, q](NodeT<R>& nd) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (int j = 0; j < p; ++j) an->grad[j] += nd.grad[j];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int j = 0; j < q; ++j) bn->grad[j] += nd.grad[p + j];
    }
  });
}

template <class R>
TensorT<R> embedding_rows(const TensorT<R>& table, const std::vector<int>& ids) {
  if (table.rank() != 2) fail(ErrorCode::ShapeMismatch, "embedding table must be 2-D");
  int v = table.dim(0), d = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= v)
      fail(ErrorCode::IdOutOfRange,
           "id " + std::to_string(id) + " outside table of " + std::to_string(v));
  int n = static_cast<int>(ids.size());
  std::vector<R> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy_n(table.data() + static_cast<std::size_t>(ids[i]) * d, d,
                out.begin() + static_cast<std::size_t>(i) * d);
  auto tn = table.node();
  return make_op_result<R>({n, d}, std::move(out), {table}, [tn, ids, d](NodeT<R>& nd) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j)
        tn->grad[static_cast<std::size_t>(ids[i]) * d + j] += nd.grad[i * d + j];
  });
}

// Adds vector v to every row of x.
template <class R>
TensorT<R> add_row_broadcast(const TensorT<R>& x, const TensorT<R>& v) {
  if (x.rank() != 2 || v.rank() != 1 || x.dim(1) != v.dim(0))
    fail(ErrorCode::ShapeMismatch,
         "add_row_broadcast: " + shape_str(x.shape()) + " + " + shape_str(v.shape()));
  int n = x.dim(0), d = x.dim(1);
  std::vector<R> out(x.data(), x.data() + x.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] += v.data()[j];
  auto xn = x.node(), vn = v.node();
  return make_op_result<R>(x.shape(), std::move(out), {x, v}, [xn, vn, n, d](NodeT<R>& nd) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (std::size_t i = 0; i < nd.grad.size(); ++i) xn->grad[i] += nd.grad[i];
    }
    if (vn->requires_grad) {
      vn->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) vn->grad[j] += nd.grad[static_cast<std::size_t>(i) * d + j];
    }
  });
}

// ---- normalization / softmax / regularization ----

template <class R>
TensorT<R> layer_norm_rows(const TensorT<R>& x, const TensorT<R>& gain, const TensorT<R>& bias,
                           double eps = 1e-12) {
  bool vec = x.rank() == 1;
  int n = vec ? 1 : x.dim(0);
  int d = vec ? x.dim(0) : x.dim(1);
  if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d)
    fail(ErrorCode::ShapeMismatch, "layer_norm: width mismatch");
  std::vector<R> out(x.size());
  auto xhat = std::make_shared<std::vector<R>>(x.size());
  auto inv_std = std::make_shared<std::vector<R>>(n);
  for (int i = 0; i < n; ++i) {
    const R* xr = x.data() + static_cast<std::size_t>(i) * d;
    double mean = 0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0;
    for (int j = 0; j < d; ++j) {
      double c = xr[j] - mean;
      var += c * c;
    }
    var /= d;
    R istd = static_cast<R>(1.0 / std::sqrt(var + eps));
    (*inv_std)[i] = istd;
    for (int j = 0; j < d; ++j) {
      R xh = (xr[j] - static_cast<R>(mean)) * istd;
      (*xhat)[static_cast<std::size_t>(i) * d + j] = xh;
      out[static_cast<std::size_t>(i) * d + j] = xh * gain.data()[j] + bias.data()[j];
    }
  }
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return make_op_result<R>(
      x.shape(), std::move(out), {x, gain, bias}, [xn, gn, bn, xhat, inv_std, n, d](NodeT<R>& nd) {
        for (int i = 0; i < n; ++i) {
          const R* dy = nd.grad.data() + static_cast<std::size_t>(i) * d;
          const R* xh = xhat->data() + static_cast<std::size_t>(i) * d;
          if (gn->requires_grad) {
            gn->ensure_grad();
            for (int j = 0; j < d; ++j) gn->grad[j] += dy[j] * xh[j];
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            for (int j = 0; j < d; ++j) bn->grad[j] += dy[j];
          }
          if (xn->requires_grad) {
            xn->ensure_grad();
            double m1 = 0, m2 = 0;
            for (int j = 0; j < d; ++j) {
              double dxh = double(dy[j]) * double(gn->val[j]);
              m1 += dxh;
              m2 += dxh * xh[j];
            }
            m1 /= d;
            m2 /= d;
            R* dx = xn->grad.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
              double dxh = double(dy[j]) * double(gn->val[j]);
              dx[j] += static_cast<R>((*inv_std)[i] * (dxh - m1 - double(xh[j]) * m2));
            }
          }
        }
      });
}

// Row-wise softmax; masked columns (mask[j] == 0) get probability zero.
template <class R>
TensorT<R> softmax_rows(const TensorT<R>& x, const std::vector<uint8_t>* col_mask = nullptr) {
  bool vec = x.rank() == 1;
  int n = vec ? 1 : x.dim(0);
  int d = vec ? x.dim(0) : x.dim(1);
  if (col_mask && static_cast<int>(col_mask->size()) != d)
    fail(ErrorCode::ShapeMismatch, "softmax mask width mismatch");
  std::vector<R> out(x.size());
  for (int i = 0; i < n; ++i) {
    const R* xr = x.data() + static_cast<std::size_t>(i) * d;
    R* pr = out.data() + static_cast<std::size_t>(i) * d;
    double mx = -1e300;
    for (int j = 0; j < d; ++j)
      if ((!col_mask || (*col_mask)[j]) && xr[j] > mx) mx = xr[j];
    double sum = 0;
    for (int j = 0; j < d; ++j) {
      double e = (!col_mask || (*col_mask)[j]) ? std::exp(double(xr[j]) - mx) : 0.0;
      pr[j] = static_cast<R>(e);
      sum += e;
    }
    for (int j = 0; j < d; ++j) pr[j] = static_cast<R>(double(pr[j]) / sum);
  }
  auto xn = x.node();
  return make_op_result<R>(x.shape(), std::move(out), {x}, [xn, n, d](NodeT<R>& nd) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const R* p = nd.val.data() + static_cast<std::size_t>(i) * d;
      const R* dy = nd.grad.data() + static_cast<std::size_t>(i) * d;
      double dot = 0;
      for (int j = 0; j < d; ++j) dot += double(p[j]) * double(dy[j]);
      R* dx = xn->grad.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) dx[j] += static_cast<R>(double(p[j]) * (double(dy[j]) - dot));
    }
  });
}

// Inverted dropout; identity when rate <= 0 or not training.
template <class R>
TensorT<R> dropout(const TensorT<R>& x, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  R keep = static_cast<R>(1.0 - rate);
  auto mask = std::make_shared<std::vector<R>>(x.size());
  std::vector<R> out(x.size());
  for (int64_t i = 0; i < x.size(); ++i) {
    R m = rng.uniform() < rate ? R(0) : R(1) / keep;
    (*mask)[i] = m;
    out[i] = x.data()[i] * m;
  }
  auto xn = x.node();
  return make_op_result<R>(x.shape(), std::move(out), {x}, [xn, mask](NodeT<R>& nd) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i) xn->grad[i] += nd.grad[i] * (*mask)[i];
  });
}

// L = -log(max(p[target], 1e-12)); checks p sums to 1 within 1e-6.
template <class R>
TensorT<R> cross_entropy(const TensorT<R>& probs, int target) {
  if (probs.rank() != 1) fail(ErrorCode::ShapeMismatch, "cross_entropy expects a vector");
  int k = probs.dim(0);
  if (target < 0 || target >= k) fail(ErrorCode::ShapeMismatch, "cross_entropy: bad target");
  double sum = 0;
  for (int j = 0; j < k; ++j) sum += probs.data()[j];
  if (std::abs(sum - 1.0) > 1e-6)
    fail(ErrorCode::NotAProbability, "probabilities sum to " + std::to_string(sum));
  double pt = std::max(double(probs.data()[target]), 1e-12);
  std::vector<R> out{static_cast<R>(-std::log(pt))};
  auto pn = probs.node();
  return make_op_result<R>({1}, std::move(out), {probs}, [pn, target](NodeT<R>& nd) {
    if (!pn->requires_grad) return;
    pn->ensure_grad();
    double pt = pn->val[target];
    if (pt > 1e-12) pn->grad[target] += nd.grad[0] * static_cast<R>(-1.0 / pt);
  });
}

template <class R>
TensorT<R> sum_all(const TensorT<R>& x) {
  double s = 0;
  for (int64_t i = 0; i < x.size(); ++i) s += x.data()[i];
  auto xn = x.node();
  return make_op_result<R>({1}, {static_cast<R>(s)}, {x}, [xn](NodeT<R>& nd) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += nd.grad[0];
  });
}

}  // namespace wad::nn
