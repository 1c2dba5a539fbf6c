#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "tablekg/errors.hpp"

// UTF-8 text utilities. All character offsets in this library count Unicode
// scalar values (code points), not bytes; these helpers do the conversions.

namespace tkg {

inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(bytes, i, len, c);
    if (c < 0) c = 0xFFFD;  // invalid byte sequence
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

inline std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t i = 0;
    UBool err = false;
    U8_APPEND(buf, i, U8_MAX_LENGTH, static_cast<UChar32>(c), err);
    if (err) {
      out += "\xEF\xBF\xBD";
    } else {
      out.append(reinterpret_cast<char*>(buf), static_cast<size_t>(i));
    }
  }
  return out;
}

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  while (i < len) {
    U8_FWD_1(bytes, i, len);
    ++n;
  }
  return n;
}

// Byte offset of the code point at index cp (clamped to the string end).
inline std::size_t utf8_byte_offset(std::string_view s, std::size_t cp) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  std::size_t n = 0;
  while (i < len && n < cp) {
    U8_FWD_1(bytes, i, len);
    ++n;
  }
  return static_cast<std::size_t>(i);
}

inline std::size_t utf8_cp_offset(std::string_view s, std::size_t byte_off) {
  return utf8_length(s.substr(0, std::min(byte_off, s.size())));
}

inline std::string utf8_substr(std::string_view s, std::size_t cp_start, std::size_t cp_end) {
  const std::size_t b0 = utf8_byte_offset(s, cp_start);
  const std::size_t b1 = utf8_byte_offset(s, cp_end);
  return std::string(s.substr(b0, b1 > b0 ? b1 - b0 : 0));
}

// Unicode normalization form C.
inline std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC instance unavailable");
  std::string out;
  icu::StringByteSink<std::string> sink(&out);
  norm->normalizeUTF8(0, icu::StringPiece(s.data(), static_cast<int32_t>(s.size())), sink,
                      nullptr, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  return out;
}

inline bool is_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

// Trims and collapses whitespace runs to a single space.
inline std::string collapse_whitespace(std::string_view s) {
  std::u32string in = utf8_decode(s);
  std::u32string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char32_t c : in) {
    if (is_space(c)) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) out.push_back(U' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return utf8_encode(out);
}

inline std::string fold_case(std::string_view s) {
  std::u32string in = utf8_decode(s);
  for (char32_t& c : in) {
    c = static_cast<char32_t>(u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT));
  }
  return utf8_encode(in);
}

inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    std::size_t prev_diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const std::size_t subst = prev_diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      prev_diag = row[i];
      row[i] = std::min({row[i] + 1, row[i - 1] + 1, subst});
    }
  }
  return row[a.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8_decode(a), utf8_decode(b));
}

// Levenshtein distance divided by the longer length; 0 for two empty strings.
inline double normalized_edit_distance(std::string_view a, std::string_view b) {
  const std::u32string ua = utf8_decode(a);
  const std::u32string ub = utf8_decode(b);
  const std::size_t maxlen = std::max(ua.size(), ub.size());
  if (maxlen == 0) return 0.0;
  return static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(maxlen);
}

// Similarity on case-folded, whitespace-collapsed strings; empty vs empty is 1.
inline double string_similarity(std::string_view a, std::string_view b) {
  const std::string ca = fold_case(collapse_whitespace(a));
  const std::string cb = fold_case(collapse_whitespace(b));
  return 1.0 - normalized_edit_distance(ca, cb);
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (static_cast<unsigned char>(s[b]) <= ' ')) ++b;
  while (e > b && (static_cast<unsigned char>(s[e - 1]) <= ' ')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace tkg
