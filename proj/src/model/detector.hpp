#pragma once

#include <array>

#include "http/request.hpp"
#include "model/hge.hpp"
#include "nn/transformer.hpp"
#include "text/unicode.hpp"

namespace wad::model {

template <class R>
struct ChannelT {
  HgeParamsT<R> hge;
  std::vector<nn::TransformerLayerParamsT<R>> layers;
};

// Fusion attention probabilities plus the keys of the fused parameters.
template <class R>
struct AttentionRecordT {
  std::vector<R> weights;  // [heads, n, n]
  int heads = 0;
  int n = 0;
  std::vector<std::string> labels;

  bool empty() const { return n == 0; }
  R weight(int h, int i, int j) const {
    return weights[(static_cast<std::size_t>(h) * n + i) * n + j];
  }
};

template <class R>
struct PredictionT {
  std::array<double, 2> probs{};  // benign, malicious
  int predicted = 0;
  nn::TensorT<R> prob_tensor;  // graph handle, used for the training loss
  nn::TensorT<R> f_url, f_payload;
  AttentionRecordT<R> attention;
  int dropped_params = 0;
};

template <class R>
struct DetectorModelT {
  DetectorConfig cfg;
  tok::Vocab url_vocab, param_vocab;
  tok::CharVocab char_vocab;
  ChannelT<R> url_channel, param_channel;
  nn::TransformerLayerParamsT<R> fusion;
  nn::TensorT<R> null_payload;  // stand-in f_payload for parameter-free requests
  nn::TensorT<R> cls_w;         // [2*hidden, 2]
  nn::TensorT<R> cls_b;         // [2]

  std::vector<std::pair<std::string, nn::TensorT<R>>> named_params() const {
    std::vector<std::pair<std::string, nn::TensorT<R>>> out;
    auto add_gru = [&](const std::string& p, const nn::GruParamsT<R>& g) {
      const char* names[] = {"wz", "wr", "wh", "uz", "ur", "uh", "bz", "br", "bh"};
      auto ts = g.params();
      for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(p + "." + names[i], ts[i]);
    };
    auto add_layer = [&](const std::string& p, const nn::TransformerLayerParamsT<R>& l) {
      const char* anames[] = {"wq", "wk", "wv", "wo", "bq", "bk", "bv", "bo"};
      auto ats = l.attn.params();
      for (std::size_t i = 0; i < ats.size(); ++i) out.emplace_back(p + ".attn." + anames[i], ats[i]);
      out.emplace_back(p + ".w1", l.w1);
      out.emplace_back(p + ".b1", l.b1);
      out.emplace_back(p + ".w2", l.w2);
      out.emplace_back(p + ".b2", l.b2);
      out.emplace_back(p + ".ln1_g", l.ln1_g);
      out.emplace_back(p + ".ln1_b", l.ln1_b);
      out.emplace_back(p + ".ln2_g", l.ln2_g);
      out.emplace_back(p + ".ln2_b", l.ln2_b);
    };
    auto add_channel = [&](const std::string& p, const ChannelT<R>& ch) {
      out.emplace_back(p + ".hge.ce", ch.hge.ce);
      add_gru(p + ".hge.gru_fwd", ch.hge.gru_fwd);
      add_gru(p + ".hge.gru_bwd", ch.hge.gru_bwd);
      out.emplace_back(p + ".hge.proj_w", ch.hge.proj_w);
      out.emplace_back(p + ".hge.proj_b", ch.hge.proj_b);
      out.emplace_back(p + ".hge.token_table", ch.hge.token_table);
      out.emplace_back(p + ".hge.pos_table", ch.hge.pos_table);
      out.emplace_back(p + ".hge.segment", ch.hge.segment);
      for (std::size_t i = 0; i < ch.layers.size(); ++i)
        add_layer(p + ".layer" + std::to_string(i), ch.layers[i]);
    };
    add_channel("url", url_channel);
    add_channel("param", param_channel);
    add_layer("fusion", fusion);
    out.emplace_back("null_payload", null_payload);
    out.emplace_back("classifier.w", cls_w);
    out.emplace_back("classifier.b", cls_b);
    return out;
  }

  std::vector<nn::TensorT<R>> parameters() const {
    std::vector<nn::TensorT<R>> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& t : parameters()) n += t.size();
    return n;
  }
};

inline int positions_for(const EncoderConfig& enc) {
  return std::max(enc.max_tokens, enc.max_chars + 2);
}

template <class R>
DetectorModelT<R> build_detector(const DetectorConfig& cfg, tok::Vocab url_vocab,
                                 tok::Vocab param_vocab, uint64_t seed) {
  cfg.validate();
  nn::Rng rng(seed);
  DetectorModelT<R> m;
  m.cfg = cfg;
  m.url_vocab = std::move(url_vocab);
  m.param_vocab = std::move(param_vocab);

  auto build_channel = [&](const EncoderConfig& enc, const tok::Vocab& v) {
    ChannelT<R> ch;
    ch.hge = HgeParamsT<R>::init(v.size(), cfg.char_vocab, enc.hidden, cfg.gru_hidden(),
                                 positions_for(enc), rng);
    for (int i = 0; i < enc.layers; ++i)
      ch.layers.push_back(
          nn::TransformerLayerParamsT<R>::init(enc.hidden, enc.heads, enc.intermediate, rng));
    return ch;
  };
  m.url_channel = build_channel(cfg.url, m.url_vocab);
  m.param_channel = build_channel(cfg.param, m.param_vocab);
  m.fusion = nn::TransformerLayerParamsT<R>::init(cfg.hidden(), cfg.fusion.heads,
                                                  cfg.fusion.intermediate, rng);
  m.null_payload = nn::TensorT<R>::param({cfg.hidden()}, rng);
  m.cls_w = nn::TensorT<R>::param({2 * cfg.hidden(), 2}, rng);
  m.cls_b = nn::TensorT<R>::param_zeros({2});
  return m;
}

inline std::string clip_codepoints(const std::string& text, int max_cps) {
  auto cps = text::codepoints_lenient(text);
  if (static_cast<int>(cps.size()) <= max_cps) return text;
  cps.resize(max_cps);
  return text::encode_codepoints(cps);
}

inline tok::TokenizedText tokenize_for_mode(const std::string& text, EmbeddingMode mode,
                                            const tok::Vocab& v, const tok::CharVocab& cv) {
  switch (mode) {
    case EmbeddingMode::Char: return tok::tokenize_chars(text, v, cv);
    case EmbeddingMode::Word: return tok::tokenize_words(text, v, cv);
    default: return tok::tokenize(text, v, cv);
  }
}

// Tokenize -> embed -> encoder stack -> hidden state of [CLS].
template <class R>
nn::TensorT<R> encode_text(const std::string& raw_text, const ChannelT<R>& ch,
                           const EncoderConfig& enc, EmbeddingMode mode, const tok::Vocab& v,
                           const tok::CharVocab& cv, double dropout_rate, nn::Rng& rng,
                           bool training) {
  std::string text = clip_codepoints(raw_text, enc.max_chars);
  auto t = tok::truncate_tokens(tokenize_for_mode(text, mode, v, cv), enc.max_tokens, v);
  auto x = hybrid_embed(t, ch.hge, mode, v);
  x = nn::dropout(x, dropout_rate, rng, training);
  for (const auto& layer : ch.layers)
    x = nn::transformer_layer(x, layer, dropout_rate, rng, training);
  return nn::row(x, 0);
}

template <class R>
nn::TensorT<R> encode_url(const std::string& normalized_url, const DetectorModelT<R>& m,
                          nn::Rng& rng, bool training = false) {
  return encode_text(normalized_url, m.url_channel, m.cfg.url, m.cfg.embedding_mode, m.url_vocab,
                     m.char_vocab, m.cfg.dropout, rng, training);
}

inline std::string parameter_text(const http::Parameter& p) { return p.key + "=" + p.value; }

template <class R>
nn::TensorT<R> encode_param(const http::Parameter& p, const DetectorModelT<R>& m, nn::Rng& rng,
                            bool training = false) {
  return encode_text(parameter_text(p), m.param_channel, m.cfg.param, m.cfg.embedding_mode,
                     m.param_vocab, m.char_vocab, m.cfg.dropout, rng, training);
}

template <class R>
struct FusionResultT {
  nn::TensorT<R> f_payload;
  AttentionRecordT<R> record;
};

// One attention + FFN block over the unordered parameter features, then
// average pooling. Returns the learned null vector for an empty list.
template <class R>
FusionResultT<R> fuse_params(const std::vector<nn::TensorT<R>>& features,
                             const DetectorModelT<R>& m, nn::Rng& rng, bool training = false) {
  FusionResultT<R> res;
  if (features.empty()) {
    res.f_payload = m.null_payload;
    return res;
  }
  auto x = nn::stack_rows(features);
  auto out = nn::transformer_layer_with_weights(x, m.fusion, m.cfg.dropout, rng, training);
  res.f_payload = nn::mean_rows(out.out);
  res.record.weights = std::move(out.attn_weights);
  res.record.heads = out.heads;
  res.record.n = out.n;
  return res;
}

// f = [f_URL; f_payload]; probabilities = softmax(W f + b).
template <class R>
nn::TensorT<R> classify(const nn::TensorT<R>& f_url, const nn::TensorT<R>& f_payload,
                        const DetectorModelT<R>& m) {
  auto f = nn::concat(f_url, f_payload);
  auto logits = nn::linear(f, m.cls_w, m.cls_b);
  return nn::softmax_rows(logits);
}

// Flat-payload ablation: all parameter texts concatenated into one sequence
// with [SEP] separators; the [CLS] state replaces the fusion output.
template <class R>
nn::TensorT<R> encode_flat_payload(const std::vector<http::Parameter>& params,
                                   const DetectorModelT<R>& m, nn::Rng& rng, bool training) {
  const auto& enc = m.cfg.param;
  const auto& v = m.param_vocab;
  tok::TokenizedText flat;
  flat.token_ids.push_back(v.cls_id());
  flat.spans.push_back({});
  std::string joined;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) {
      flat.token_ids.push_back(v.sep_id());
      flat.spans.push_back({});
      joined += ' ';
    }
    int offset = static_cast<int>(text::codepoints_lenient(joined).size());
    std::string text = clip_codepoints(parameter_text(params[i]), enc.max_chars);
    auto t = tokenize_for_mode(text, m.cfg.embedding_mode, v, m.char_vocab);
    for (int j = 1; j + 1 < t.length(); ++j) {
      flat.token_ids.push_back(t.token_ids[j]);
      auto sp = t.spans[j];
      flat.spans.push_back(sp.sentinel() ? sp : tok::Span{sp.s + offset, sp.e + offset});
    }
    joined += text;
  }
  flat.token_ids.push_back(v.sep_id());
  flat.spans.push_back({});
  std::string clipped = clip_codepoints(joined, enc.max_chars);
  for (uint32_t cp : text::codepoints_lenient(clipped)) flat.char_ids.push_back(m.char_vocab.id_of(cp));
  // spans beyond the char clip would dangle; tokens covering them are dropped
  tok::TokenizedText safe;
  safe.char_ids = flat.char_ids;
  int L = static_cast<int>(safe.char_ids.size());
  for (int i = 0; i < flat.length(); ++i) {
    if (!flat.spans[i].sentinel() && flat.spans[i].e >= L) continue;
    safe.token_ids.push_back(flat.token_ids[i]);
    safe.spans.push_back(flat.spans[i]);
  }
  auto t = tok::truncate_tokens(safe, enc.max_tokens, v);
  auto x = hybrid_embed(t, m.param_channel.hge, m.cfg.embedding_mode, v);
  x = nn::dropout(x, m.cfg.dropout, rng, training);
  for (const auto& layer : m.param_channel.layers)
    x = nn::transformer_layer(x, layer, m.cfg.dropout, rng, training);
  return nn::row(x, 0);
}

template <class R>
PredictionT<R> forward(const http::ParsedRequest& req, const DetectorModelT<R>& m, nn::Rng& rng,
                       bool training = false) {
  PredictionT<R> pred;
  int hidden = m.cfg.hidden();

  std::vector<http::Parameter> params = req.params;
  if (static_cast<int>(params.size()) > m.cfg.max_params) {
    pred.dropped_params = static_cast<int>(params.size()) - m.cfg.max_params;
    params.resize(m.cfg.max_params);
  }

  if (m.cfg.channel_mode == ChannelMode::PayloadOnly)
    pred.f_url = nn::TensorT<R>::zeros({hidden});
  else
    pred.f_url = encode_url(req.url, m, rng, training);

  if (m.cfg.channel_mode == ChannelMode::UrlOnly) {
    pred.f_payload = nn::TensorT<R>::zeros({hidden});
  } else if (m.cfg.payload_mode == PayloadMode::Flat) {
    pred.f_payload = params.empty() ? m.null_payload : encode_flat_payload(params, m, rng, training);
  } else {
    std::vector<nn::TensorT<R>> features;
    features.reserve(params.size());
    for (const auto& p : params) features.push_back(encode_param(p, m, rng, training));
    auto fused = fuse_params(features, m, rng, training);
    pred.f_payload = fused.f_payload;
    pred.attention = std::move(fused.record);
    for (const auto& p : params) pred.attention.labels.push_back(p.key);
    if (pred.attention.empty()) pred.attention.labels.clear();
  }

  pred.prob_tensor = classify(pred.f_url, pred.f_payload, m);
  pred.probs = {double(pred.prob_tensor.data()[0]), double(pred.prob_tensor.data()[1])};
  pred.predicted = pred.probs[1] > pred.probs[0] ? 1 : 0;
  return pred;
}

using DetectorModel = DetectorModelT<float>;
using Prediction = PredictionT<float>;
using AttentionRecord = AttentionRecordT<float>;

}  // namespace wad::model
