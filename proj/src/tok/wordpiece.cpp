#include "tok/wordpiece.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "error.hpp"
#include "text/unicode.hpp"

namespace wad::tok {
namespace {

constexpr int kMaxWordCodepoints = 64;

bool is_ws(uint32_t cp) { return cp == ' ' || cp == '\t' || cp == '\r' || cp == '\n' || cp == '\f' || cp == '\v'; }
bool is_alnum(uint32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

std::string encode_range(const std::vector<uint32_t>& cps, int start, int len) {
  std::string out;
  for (int i = 0; i < len; ++i) text::utf8_append(out, cps[start + i]);
  return out;
}

}  // namespace

std::vector<Word> pretokenize(const std::vector<uint32_t>& cps) {
  std::vector<Word> words;
  int n = static_cast<int>(cps.size());
  int i = 0;
  while (i < n) {
    if (is_ws(cps[i])) {
      ++i;
      continue;
    }
    if (is_alnum(cps[i])) {
      int j = i;
      while (j < n && is_alnum(cps[j])) ++j;
      words.push_back({encode_range(cps, i, j - i), i, j - i});
      i = j;
    } else {
      words.push_back({encode_range(cps, i, 1), i, 1});
      ++i;
    }
  }
  return words;
}

std::vector<Word> word_split(const std::vector<uint32_t>& cps) {
  // [A-Za-z0-9]+|[^A-Za-z0-9\s] matches exactly the pretokenizer's output.
  return pretokenize(cps);
}

TokenizedText tokenize(const std::string& text, const Vocab& v, const CharVocab& cv) {
  TokenizedText t;
  std::vector<uint32_t> cps = text::codepoints_lenient(text);
  t.char_ids.reserve(cps.size());
  for (uint32_t cp : cps) t.char_ids.push_back(cv.id_of(cp));

  t.token_ids.push_back(v.cls_id());
  t.spans.push_back({});

  for (const Word& w : pretokenize(cps)) {
    Span word_span{w.start, w.start + w.length - 1};
    if (w.length > kMaxWordCodepoints) {
      t.token_ids.push_back(v.unk_id());
      t.spans.push_back(word_span);
      continue;
    }
    std::vector<int> ids;
    std::vector<Span> spans;
    int pos = 0;
    bool bad = false;
    while (pos < w.length) {
      int match_end = -1, match_id = -1;
      for (int end = w.length; end > pos; --end) {
        std::string cand = encode_range(cps, w.start + pos, end - pos);
        if (pos > 0) cand = std::string(Vocab::kContinuation) + cand;
        int id = v.lookup(cand);
        if (id >= 0) {
          match_end = end;
          match_id = id;
          break;
        }
      }
      if (match_id < 0) {
        bad = true;
        break;
      }
      ids.push_back(match_id);
      spans.push_back({w.start + pos, w.start + match_end - 1});
      pos = match_end;
    }
    if (bad) {
      t.token_ids.push_back(v.unk_id());
      t.spans.push_back(word_span);
    } else {
      t.token_ids.insert(t.token_ids.end(), ids.begin(), ids.end());
      t.spans.insert(t.spans.end(), spans.begin(), spans.end());
    }
  }

  t.token_ids.push_back(v.sep_id());
  t.spans.push_back({});
  return t;
}

TokenizedText tokenize_chars(const std::string& text, const Vocab& v, const CharVocab& cv) {
  TokenizedText t;
  std::vector<uint32_t> cps = text::codepoints_lenient(text);
  t.char_ids.reserve(cps.size());
  for (uint32_t cp : cps) t.char_ids.push_back(cv.id_of(cp));

  t.token_ids.push_back(v.cls_id());
  t.spans.push_back({});
  for (int j = 0; j < static_cast<int>(cps.size()); ++j) {
    t.token_ids.push_back(t.char_ids[j]);
    t.spans.push_back({j, j});
  }
  t.token_ids.push_back(v.sep_id());
  t.spans.push_back({});
  return t;
}

TokenizedText tokenize_words(const std::string& text, const Vocab& v, const CharVocab& cv) {
  TokenizedText t;
  std::vector<uint32_t> cps = text::codepoints_lenient(text);
  t.char_ids.reserve(cps.size());
  for (uint32_t cp : cps) t.char_ids.push_back(cv.id_of(cp));

  t.token_ids.push_back(v.cls_id());
  t.spans.push_back({});
  for (const Word& w : word_split(cps)) {
    int id = v.lookup(w.text);
    t.token_ids.push_back(id >= 0 ? id : v.unk_id());
    t.spans.push_back({w.start, w.start + w.length - 1});
  }
  t.token_ids.push_back(v.sep_id());
  t.spans.push_back({});
  return t;
}

TokenizedText truncate_tokens(const TokenizedText& t, int max_len, const Vocab& v) {
  if (max_len < 2) fail(ErrorCode::ShapeMismatch, "max_len must be >= 2");
  if (t.length() <= max_len) return t;
  TokenizedText out;
  out.char_ids = t.char_ids;
  out.token_ids.assign(t.token_ids.begin(), t.token_ids.begin() + max_len - 1);
  out.spans.assign(t.spans.begin(), t.spans.begin() + max_len - 1);
  out.token_ids.push_back(v.sep_id());
  out.spans.push_back({});
  return out;
}

TokenizedText pad_and_truncate(const TokenizedText& t, int max_len, const Vocab& v) {
  TokenizedText out = truncate_tokens(t, max_len, v);
  while (out.length() < max_len) {
    out.token_ids.push_back(v.pad_id());
    out.spans.push_back({});
  }
  return out;
}

namespace {

std::string strip_continuation(const std::string& s) {
  if (s.rfind(Vocab::kContinuation, 0) == 0) return s.substr(2);
  return s;
}

}  // namespace

Vocab train_wordpiece(const std::vector<std::string>& corpus, int target_size) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "wordpiece trainer needs a non-empty corpus");

  std::map<std::string, long> word_freq;
  for (const auto& text : corpus) {
    auto cps = text::codepoints_lenient(text);
    for (const Word& w : pretokenize(cps)) ++word_freq[w.text];
  }

  // Symbol interning: initial symbols are "c" for word-initial characters and
  // "##c" for continuations.
  std::vector<std::string> sym_str;
  std::map<std::string, int> sym_id;
  auto intern = [&](const std::string& s) {
    auto it = sym_id.find(s);
    if (it != sym_id.end()) return it->second;
    int id = static_cast<int>(sym_str.size());
    sym_str.push_back(s);
    sym_id.emplace(s, id);
    return id;
  };

  struct Entry {
    std::vector<int> syms;
    long freq;
  };
  std::vector<Entry> words;
  std::set<std::string> alphabet;
  for (const auto& [w, f] : word_freq) {
    auto cps = text::codepoints_lenient(w);
    Entry e;
    e.freq = f;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      std::string piece;
      if (i > 0) piece = Vocab::kContinuation;
      text::utf8_append(piece, cps[i]);
      alphabet.insert(piece);
      e.syms.push_back(intern(piece));
    }
    if (!e.syms.empty()) words.push_back(std::move(e));
  }

  Vocab v = Vocab::with_specials();
  if (target_size < v.size() + static_cast<int>(alphabet.size()))
    fail(ErrorCode::VocabTooSmall,
         "target " + std::to_string(target_size) + " < specials + alphabet (" +
             std::to_string(v.size() + alphabet.size()) + ")");
  for (const auto& a : alphabet) v.add(a);

  while (v.size() < target_size) {
    // Recount symbol and adjacent-pair frequencies over the current splits.
    std::vector<long> sym_count(sym_str.size(), 0);
    std::map<std::pair<int, int>, long> pair_count;
    for (const Entry& e : words) {
      for (std::size_t i = 0; i < e.syms.size(); ++i) {
        sym_count[e.syms[i]] += e.freq;
        if (i + 1 < e.syms.size()) pair_count[{e.syms[i], e.syms[i + 1]}] += e.freq;
      }
    }
    if (pair_count.empty()) break;

    // Best pair by score = pair/(left*right); ties resolved on token strings.
    bool have_best = false;
    std::pair<int, int> best{};
    double best_score = 0.0;
    for (const auto& [p, c] : pair_count) {
      double score = double(c) / (double(sym_count[p.first]) * double(sym_count[p.second]));
      if (!have_best || score > best_score ||
          (score == best_score &&
           std::make_pair(sym_str[p.first], sym_str[p.second]) <
               std::make_pair(sym_str[best.first], sym_str[best.second]))) {
        have_best = true;
        best = p;
        best_score = score;
      }
    }
    if (!have_best) break;

    std::string merged = sym_str[best.first] + strip_continuation(sym_str[best.second]);
    int merged_id = intern(merged);
    v.add(merged);

    for (Entry& e : words) {
      if (e.syms.size() < 2) continue;
      std::vector<int> out;
      out.reserve(e.syms.size());
      std::size_t i = 0;
      while (i < e.syms.size()) {
        if (i + 1 < e.syms.size() && e.syms[i] == best.first && e.syms[i + 1] == best.second) {
          out.push_back(merged_id);
          i += 2;
        } else {
          out.push_back(e.syms[i]);
          ++i;
        }
      }
      e.syms = std::move(out);
    }
  }
  return v;
}

Vocab train_word_vocab(const std::vector<std::string>& corpus, int target_size) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "word vocab trainer needs a non-empty corpus");
  std::map<std::string, long> freq;
  for (const auto& text : corpus) {
    auto cps = text::codepoints_lenient(text);
    for (const Word& w : word_split(cps)) ++freq[w.text];
  }
  Vocab v = Vocab::with_specials();
  if (target_size < v.size()) fail(ErrorCode::VocabTooSmall, "target below special-token count");
  std::vector<std::pair<long, std::string>> order;
  order.reserve(freq.size());
  for (const auto& [w, f] : freq) order.emplace_back(f, w);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& [f, w] : order) {
    if (v.size() >= target_size) break;
    v.add(w);
  }
  return v;
}

}  // namespace wad::tok
