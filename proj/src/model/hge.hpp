#pragma once

#include "model/config.hpp"
#include "nn/gru.hpp"
#include "nn/ops.hpp"
#include "tok/wordpiece.hpp"

namespace wad::model {

// Hybrid-granularity embedding parameters: char table feeding a single-layer
// BiGRU whose span differences are projected into the subword embedding
// space, plus the token/position/segment tables.
template <class R>
struct HgeParamsT {
  nn::TensorT<R> ce;  // [char_vocab, d]
  nn::GruParamsT<R> gru_fwd, gru_bwd;
  nn::TensorT<R> proj_w;  // [2*gru_hidden, d]
  nn::TensorT<R> proj_b;  // [d]
  nn::TensorT<R> token_table;  // [vocab, d]
  nn::TensorT<R> pos_table;    // [max_positions, d]
  nn::TensorT<R> segment;      // [d]

  static HgeParamsT init(int vocab, int char_vocab, int d, int gru_hidden, int max_positions,
                         nn::Rng& rng) {
    HgeParamsT p;
    p.ce = nn::TensorT<R>::param({char_vocab, d}, rng);
    p.gru_fwd = nn::GruParamsT<R>::init(d, gru_hidden, rng);
    p.gru_bwd = nn::GruParamsT<R>::init(d, gru_hidden, rng);
    p.proj_w = nn::TensorT<R>::param({2 * gru_hidden, d}, rng);
    p.proj_b = nn::TensorT<R>::param_zeros({d});
    p.token_table = nn::TensorT<R>::param({vocab, d}, rng);
    p.pos_table = nn::TensorT<R>::param({max_positions, d}, rng);
    p.segment = nn::TensorT<R>::param_zeros({d});
    return p;
  }

  int width() const { return ce.dim(1); }
  int gru_hidden() const { return gru_fwd.hidden_width(); }
  int max_positions() const { return pos_table.dim(0); }

  std::vector<nn::TensorT<R>> params() const {
    std::vector<nn::TensorT<R>> v{ce, proj_w, proj_b, token_table, pos_table, segment};
    for (const auto& t : gru_fwd.params()) v.push_back(t);
    for (const auto& t : gru_bwd.params()) v.push_back(t);
    return v;
  }
};

template <class R>
struct CharStatesT {
  nn::TensorT<R> fwd;  // [L, k]
  nn::TensorT<R> bwd;  // [L, k]
  int length() const { return fwd.dim(0); }
};

// Directional state sequences over the char ids; h(-1) and h(L) are zero.
template <class R>
CharStatesT<R> run_bigru(const std::vector<int>& char_ids, const HgeParamsT<R>& p) {
  if (char_ids.empty()) fail(ErrorCode::ShapeMismatch, "run_bigru needs at least one character");
  auto xs = nn::embedding_rows(p.ce, char_ids);  // IdOutOfRange on bad ids
  auto h0f = nn::TensorT<R>::zeros({p.gru_hidden()});
  auto h0b = nn::TensorT<R>::zeros({p.gru_hidden()});
  CharStatesT<R> st;
  st.fwd = nn::gru_sequence(xs, h0f, p.gru_fwd, false);
  st.bwd = nn::gru_sequence(xs, h0b, p.gru_bwd, true);
  return st;
}

// Differential span representation: concat(fwd[e] - fwd[s-1], bwd[s] - bwd[e+1])
// with the subtraction dropped at the sequence boundaries. Sentinel spans
// (special tokens) give the zero vector.
template <class R>
nn::TensorT<R> token_char_repr(const CharStatesT<R>& states, tok::Span span) {
  int k = states.fwd.dim(1);
  if (span.sentinel()) return nn::TensorT<R>::zeros({2 * k});
  int L = states.length();
  if (span.s < 0 || span.s > span.e || span.e >= L)
    fail(ErrorCode::SpanOutOfRange, "span (" + std::to_string(span.s) + "," +
                                        std::to_string(span.e) + ") in sequence of " +
                                        std::to_string(L));
  auto h_fw = span.s > 0 ? nn::sub(nn::row(states.fwd, span.e), nn::row(states.fwd, span.s - 1))
                         : nn::row(states.fwd, span.e);
  auto h_bw = span.e < L - 1 ? nn::sub(nn::row(states.bwd, span.s), nn::row(states.bwd, span.e + 1))
                             : nn::row(states.bwd, span.s);
  return nn::concat(h_fw, h_bw);
}

// Fused span-difference matrix [m, 2k]; one graph node for all tokens.
// Row-for-row equal to stacking token_char_repr outputs.
template <class R>
nn::TensorT<R> span_diff_matrix(const CharStatesT<R>& states, const std::vector<tok::Span>& spans) {
  int k = states.fwd.dim(1);
  int L = states.length();
  int m = static_cast<int>(spans.size());
  for (const auto& sp : spans)
    if (!sp.sentinel() && (sp.s < 0 || sp.s > sp.e || sp.e >= L))
      fail(ErrorCode::SpanOutOfRange, "span (" + std::to_string(sp.s) + "," +
                                          std::to_string(sp.e) + ") in sequence of " +
                                          std::to_string(L));
  std::vector<R> out(static_cast<std::size_t>(m) * 2 * k, R(0));
  const R* fwd = states.fwd.data();
  const R* bwd = states.bwd.data();
  for (int i = 0; i < m; ++i) {
    const auto& sp = spans[i];
    if (sp.sentinel()) continue;
    R* o = out.data() + static_cast<std::size_t>(i) * 2 * k;
    for (int j = 0; j < k; ++j) {
      R f = fwd[static_cast<std::size_t>(sp.e) * k + j];
      if (sp.s > 0) f -= fwd[static_cast<std::size_t>(sp.s - 1) * k + j];
      R b = bwd[static_cast<std::size_t>(sp.s) * k + j];
      if (sp.e < L - 1) b -= bwd[static_cast<std::size_t>(sp.e + 1) * k + j];
      o[j] = f;
      o[k + j] = b;
    }
  }
  auto fn = states.fwd.node(), bn = states.bwd.node();
  return nn::make_op_result<R>(
      {m, 2 * k}, std::move(out), {states.fwd, states.bwd},
      [fn, bn, spans, k, L](nn::NodeT<R>& nd) {
        for (std::size_t i = 0; i < spans.size(); ++i) {
          const auto& sp = spans[i];
          if (sp.sentinel()) continue;
          const R* g = nd.grad.data() + i * 2 * k;
          if (fn->requires_grad) {
            fn->ensure_grad();
            for (int j = 0; j < k; ++j) {
              fn->grad[static_cast<std::size_t>(sp.e) * k + j] += g[j];
              if (sp.s > 0) fn->grad[static_cast<std::size_t>(sp.s - 1) * k + j] -= g[j];
            }
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            for (int j = 0; j < k; ++j) {
              bn->grad[static_cast<std::size_t>(sp.s) * k + j] += g[k + j];
              if (sp.e < L - 1) bn->grad[static_cast<std::size_t>(sp.e + 1) * k + j] -= g[k + j];
            }
          }
        }
      });
}

// E_WordPiece: token + position + segment embeddings.
template <class R>
nn::TensorT<R> wordpiece_embed(const tok::TokenizedText& t, const HgeParamsT<R>& p) {
  int m = t.length();
  if (m > p.max_positions())
    fail(ErrorCode::ShapeMismatch, "sequence of " + std::to_string(m) +
                                       " tokens exceeds position table of " +
                                       std::to_string(p.max_positions()));
  auto tok_emb = nn::embedding_rows(p.token_table, t.token_ids);
  std::vector<int> positions(m);
  for (int i = 0; i < m; ++i) positions[i] = i;
  auto pos_emb = nn::embedding_rows(p.pos_table, positions);
  return nn::add_row_broadcast(nn::add(tok_emb, pos_emb), p.segment);
}

// Hybrid embedding matrix, one row per token of the given tokenization.
//   hge:       E_WordPiece + projection(span differences of the BiGRU states)
//   wordpiece: E_WordPiece only (also used for the word-vocabulary mode)
//   char:      char-table rows for characters, token table for specials
template <class R>
nn::TensorT<R> hybrid_embed(const tok::TokenizedText& t, const HgeParamsT<R>& p,
                            EmbeddingMode mode, const tok::Vocab& v) {
  int m = t.length();
  if (mode == EmbeddingMode::Char) {
    if (m > p.max_positions())
      fail(ErrorCode::ShapeMismatch, "char sequence exceeds position table");
    std::vector<nn::TensorT<R>> blocks;
    blocks.push_back(nn::embedding_rows(p.token_table, {v.cls_id()}));
    std::vector<int> interior;
    for (int i = 1; i + 1 < m; ++i) {
      const auto& sp = t.spans[i];
      interior.push_back(t.char_ids.at(sp.s));
    }
    if (!interior.empty()) blocks.push_back(nn::embedding_rows(p.ce, interior));
    blocks.push_back(nn::embedding_rows(p.token_table, {v.sep_id()}));
    auto rows = nn::concat_rows(blocks);
    std::vector<int> positions(m);
    for (int i = 0; i < m; ++i) positions[i] = i;
    auto pos_emb = nn::embedding_rows(p.pos_table, positions);
    return nn::add_row_broadcast(nn::add(rows, pos_emb), p.segment);
  }

  auto wp = wordpiece_embed(t, p);
  if (mode == EmbeddingMode::WordPiece || mode == EmbeddingMode::Word) return wp;

  // hge: add the projected character term
  nn::TensorT<R> diffs;
  if (t.char_ids.empty()) {
    diffs = nn::TensorT<R>::zeros({m, 2 * p.gru_hidden()});
  } else {
    auto states = run_bigru(t.char_ids, p);
    diffs = span_diff_matrix(states, t.spans);
  }
  auto char_term = nn::linear(diffs, p.proj_w, p.proj_b);
  return nn::add(wp, char_term);
}

}  // namespace wad::model
