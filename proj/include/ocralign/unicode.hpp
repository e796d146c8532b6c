#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ocralign/common.hpp"

namespace ocralign {

// All text is handled as sequences of Unicode scalar values. These helpers
// convert between UTF-8 byte strings and std::u32string without any
// normalization.

namespace detail {
inline bool is_continuation(unsigned char b) { return (b & 0xc0) == 0x80; }
}  // namespace detail

// Strict decoder: rejects truncated sequences, overlong encodings,
// surrogates and values beyond U+10FFFF. The error message carries the byte
// offset so file loaders can point at the exact spot.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xe0) == 0xc0) {
      cp = b0 & 0x1f;
      len = 2;
    } else if ((b0 & 0xf0) == 0xe0) {
      cp = b0 & 0x0f;
      len = 3;
    } else if ((b0 & 0xf8) == 0xf0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw DataError("invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + len > s.size()) {
      throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto bk = static_cast<unsigned char>(s[i + k]);
      if (!detail::is_continuation(bk)) {
        throw DataError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      }
      cp = (cp << 6) | (bk & 0x3f);
    }
    static constexpr std::uint32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMinByLen[len]) {
      throw DataError("overlong UTF-8 sequence at offset " + std::to_string(i));
    }
    if (cp >= 0xd800 && cp <= 0xdfff) {
      throw DataError("UTF-8 encoded surrogate at offset " + std::to_string(i));
    }
    if (cp > 0x10ffff) {
      throw DataError("UTF-8 value out of range at offset " + std::to_string(i));
    }
    out.push_back(static_cast<char32_t>(cp));
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  const auto v = static_cast<std::uint32_t>(cp);
  if (v < 0x80) {
    out.push_back(static_cast<char>(v));
  } else if (v < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (v >> 6)));
    out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
  } else if (v < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (v >> 12)));
    out.push_back(static_cast<char>(0x80 | ((v >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (v >> 18)));
    out.push_back(static_cast<char>(0x80 | ((v >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((v >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
  }
}

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

inline std::string encode_utf8(char32_t cp) {
  std::string out;
  append_utf8(out, cp);
  return out;
}

}  // namespace ocralign
