#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wad::text {

// Decodes one UTF-8 sequence starting at s[i]. Returns the number of bytes
// consumed and stores the code point in cp, or returns 0 if the bytes at i do
// not form a valid sequence (overlong forms, surrogates and > U+10FFFF are
// rejected).
std::size_t utf8_decode(const std::string& s, std::size_t i, uint32_t& cp);

void utf8_append(std::string& out, uint32_t cp);

// True iff the whole string is valid UTF-8.
bool utf8_valid(const std::string& s);

// Code point sequence of s. Bytes that are not part of a valid UTF-8 sequence
// are passed through as their byte value (Latin-1 style), so the result is
// total and re-encodable.
std::vector<uint32_t> codepoints_lenient(const std::string& s);

std::string encode_codepoints(const std::vector<uint32_t>& cps);

// Full-width to half-width folding: U+FF01..U+FF5E -> ASCII, U+3000 -> space,
// U+FFE0..U+FFE6 -> half-width signs. Other code points map to themselves.
uint32_t width_fold(uint32_t cp);

// Applies width_fold to every code point of a UTF-8 string. Invalid bytes are
// left untouched.
std::string width_fold_utf8(const std::string& s);

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }

std::string ascii_lower(const std::string& s);

}  // namespace wad::text
