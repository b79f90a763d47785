#include "text/percent.hpp"

#include <cstdint>
#include <vector>

#include "text/unicode.hpp"

namespace wad::text {
namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_triple(const std::string& s, std::size_t i) {
  return i + 2 < s.size() && s[i] == '%' && hex_digit(s[i + 1]) >= 0 && hex_digit(s[i + 2]) >= 0;
}

std::size_t utf8_seq_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if (lead >= 0xC2 && lead <= 0xDF) return 2;
  if (lead >= 0xE0 && lead <= 0xEF) return 3;
  if (lead >= 0xF0 && lead <= 0xF4) return 4;
  return 0;
}

}  // namespace

std::string percent_decode_once(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_triple(s, i)) {
      out.push_back(s[i]);
      ++i;
      continue;
    }
    // Maximal run of consecutive triples, so multi-byte UTF-8 sequences can be
    // resolved across triples.
    std::size_t run_start = i;
    std::vector<unsigned char> bytes;
    while (is_triple(s, i)) {
      bytes.push_back(static_cast<unsigned char>(hex_digit(s[i + 1]) * 16 + hex_digit(s[i + 2])));
      i += 3;
    }
    auto retain = [&](std::size_t triple_idx) {
      out.append(s, run_start + 3 * triple_idx, 3);
    };
    std::size_t bi = 0;
    while (bi < bytes.size()) {
      unsigned char b = bytes[bi];
      if (b != 0 && b < 0x80) {
        out.push_back(char(b));
        ++bi;
        continue;
      }
      std::size_t len = utf8_seq_len(b);
      if (len >= 2 && bi + len <= bytes.size()) {
        std::string seq(reinterpret_cast<const char*>(&bytes[bi]), len);
        uint32_t cp;
        if (utf8_decode(seq, 0, cp) == len) {
          out += seq;
          bi += len;
          continue;
        }
      }
      // Hex-valid but NUL, stray continuation, or broken multi-byte: keep the
      // triple as written.
      retain(bi);
      ++bi;
    }
  }
  return out;
}

std::string decode_value(const std::string& s) {
  std::string cur = s;
  for (int pass = 0; pass < kMaxDecodePasses; ++pass) {
    std::string next = width_fold_utf8(cur);
    for (char& c : next)
      if (c == '+') c = ' ';
    next = percent_decode_once(next);
    if (next == cur) return cur;
    cur = std::move(next);
  }
  return cur;
}

}  // namespace wad::text
