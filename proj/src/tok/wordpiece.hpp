#pragma once

#include <string>
#include <vector>

#include "tok/vocab.hpp"

namespace wad::tok {

// Inclusive code-point span of a token in the original text; (-1,-1) marks
// special tokens ([CLS], [SEP], [PAD]).
struct Span {
  int s = -1;
  int e = -1;
  bool sentinel() const { return s < 0; }
  bool operator==(const Span&) const = default;
};

struct TokenizedText {
  std::vector<int> token_ids;
  std::vector<Span> spans;
  std::vector<int> char_ids;  // one per code point of the original text
  int length() const { return static_cast<int>(token_ids.size()); }
};

// Pre-tokenization word: a run of ASCII alphanumerics or one single other
// non-space code point, with its code-point offset.
struct Word {
  std::string text;
  int start = 0;
  int length = 0;  // in code points
};

std::vector<Word> pretokenize(const std::vector<uint32_t>& cps);

// Regex-equivalent word split for the word-embedding mode:
// [A-Za-z0-9]+|[^A-Za-z0-9\s] over code points.
std::vector<Word> word_split(const std::vector<uint32_t>& cps);

// Greedy longest-match-first WordPiece segmentation, wrapped in [CLS]/[SEP],
// with spans against the original code-point sequence and char ids attached.
TokenizedText tokenize(const std::string& text, const Vocab& v, const CharVocab& cv);

// Each character becomes one token (its char id); spans are (j, j).
TokenizedText tokenize_chars(const std::string& text, const Vocab& v, const CharVocab& cv);

// Whole-word lookup over a word vocabulary; unknown words become [UNK].
TokenizedText tokenize_words(const std::string& text, const Vocab& v, const CharVocab& cv);

// Pads with [PAD] (sentinel spans) or truncates to exactly max_len, keeping
// [CLS] and re-appending [SEP] after truncation.
TokenizedText pad_and_truncate(const TokenizedText& t, int max_len, const Vocab& v);

// Truncation half of pad_and_truncate: caps length at max_len, no padding.
TokenizedText truncate_tokens(const TokenizedText& t, int max_len, const Vocab& v);

// Greedy WordPiece vocabulary construction: alphabet plus highest-scoring
// merges (score = pair / (left * right)) until target_size is reached or no
// pairs remain. Throws EmptyCorpus / VocabTooSmall.
Vocab train_wordpiece(const std::vector<std::string>& corpus, int target_size);

// Frequency top-k word vocabulary for the word-embedding ablation.
Vocab train_word_vocab(const std::vector<std::string>& corpus, int target_size);

}  // namespace wad::tok
