#pragma once

#include <string>

namespace wad::text {

// Recursive payload decoding. Each cycle folds full-width characters to
// half-width, turns '+' into a space, then performs one percent-decoding
// sweep; cycles repeat until a fixed point (capped at kMaxDecodePasses).
//
// A percent triple is decoded only when both hex digits are valid and the
// decoded byte run forms NUL-free valid UTF-8; anything else is kept verbatim,
// so the operation is total and idempotent.
inline constexpr int kMaxDecodePasses = 8;

std::string decode_value(const std::string& s);

// One percent-decoding sweep (no recursion, no width/plus handling).
std::string percent_decode_once(const std::string& s);

}  // namespace wad::text
