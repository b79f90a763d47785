#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace wad::tok {

// Subword vocabulary with dense ids. Specials occupy the first four slots.
class Vocab {
 public:
  static constexpr const char* kPad = "[PAD]";
  static constexpr const char* kUnk = "[UNK]";
  static constexpr const char* kCls = "[CLS]";
  static constexpr const char* kSep = "[SEP]";
  static constexpr const char* kContinuation = "##";

  static Vocab with_specials();

  int add(const std::string& token);  // returns id; existing tokens keep their id
  int lookup(const std::string& token) const;  // -1 when absent
  const std::string& token(int id) const { return id_to_token_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  int pad_id() const { return 0; }
  int unk_id() const { return 1; }
  int cls_id() const { return 2; }
  int sep_id() const { return 3; }
  bool is_special(int id) const { return id >= 0 && id <= 3; }

  // One token per line; the id is the line number.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Fixed 416-entry character vocabulary: ids 0..255 cover U+0000..U+00FF,
// 256..413 cover the U+0100..U+019D block, 414 = unknown, 415 = pad.
class CharVocab {
 public:
  static constexpr int kSize = 416;

  CharVocab();

  int id_of(uint32_t cp) const;
  int unk_id() const { return 414; }
  int pad_id() const { return 415; }
  int size() const { return kSize; }

  void save(const std::string& path) const;  // JSON map
  static CharVocab load(const std::string& path);

 private:
  std::unordered_map<uint32_t, int> map_;
};

}  // namespace wad::tok
