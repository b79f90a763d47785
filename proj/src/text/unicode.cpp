#include "text/unicode.hpp"

namespace wad::text {

std::size_t utf8_decode(const std::string& s, std::size_t i, uint32_t& cp) {
  const auto* b = reinterpret_cast<const unsigned char*>(s.data());
  std::size_t n = s.size();
  if (i >= n) return 0;
  unsigned char c0 = b[i];
  if (c0 < 0x80) {
    cp = c0;
    return 1;
  }
  auto cont = [&](std::size_t k) { return i + k < n && (b[i + k] & 0xC0) == 0x80; };
  if (c0 >= 0xC2 && c0 <= 0xDF) {
    if (!cont(1)) return 0;
    cp = (uint32_t(c0 & 0x1F) << 6) | (b[i + 1] & 0x3F);
    return 2;
  }
  if (c0 >= 0xE0 && c0 <= 0xEF) {
    if (!cont(1) || !cont(2)) return 0;
    uint32_t v = (uint32_t(c0 & 0x0F) << 12) | (uint32_t(b[i + 1] & 0x3F) << 6) | (b[i + 2] & 0x3F);
    if (v < 0x800) return 0;                 // overlong
    if (v >= 0xD800 && v <= 0xDFFF) return 0;  // surrogate
    cp = v;
    return 3;
  }
  if (c0 >= 0xF0 && c0 <= 0xF4) {
    if (!cont(1) || !cont(2) || !cont(3)) return 0;
    uint32_t v = (uint32_t(c0 & 0x07) << 18) | (uint32_t(b[i + 1] & 0x3F) << 12) |
                 (uint32_t(b[i + 2] & 0x3F) << 6) | (b[i + 3] & 0x3F);
    if (v < 0x10000 || v > 0x10FFFF) return 0;
    cp = v;
    return 4;
  }
  return 0;
}

void utf8_append(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

bool utf8_valid(const std::string& s) {
  std::size_t i = 0;
  uint32_t cp;
  while (i < s.size()) {
    std::size_t k = utf8_decode(s, i, cp);
    if (k == 0) return false;
    i += k;
  }
  return true;
}

std::vector<uint32_t> codepoints_lenient(const std::string& s) {
  std::vector<uint32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    uint32_t cp;
    std::size_t k = utf8_decode(s, i, cp);
    if (k == 0) {
      out.push_back(static_cast<unsigned char>(s[i]));
      ++i;
    } else {
      out.push_back(cp);
      i += k;
    }
  }
  return out;
}

std::string encode_codepoints(const std::vector<uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) utf8_append(out, cp);
  return out;
}

uint32_t width_fold(uint32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) return cp - 0xFEE0;
  if (cp == 0x3000) return 0x20;
  switch (cp) {
    case 0xFFE0: return 0xA2;  // cent
    case 0xFFE1: return 0xA3;  // pound
    case 0xFFE2: return 0xAC;  // not
    case 0xFFE3: return 0xAF;  // macron
    case 0xFFE4: return 0xA6;  // broken bar
    case 0xFFE5: return 0xA5;  // yen
    case 0xFFE6: return 0x20A9;  // won
    default: return cp;
  }
}

std::string width_fold_utf8(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    uint32_t cp;
    std::size_t k = utf8_decode(s, i, cp);
    if (k == 0) {
      out.push_back(s[i]);
      ++i;
      continue;
    }
    utf8_append(out, width_fold(cp));
    i += k;
  }
  return out;
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = ascii_lower(c);
  return out;
}

}  // namespace wad::text
