#pragma once

// Text canonicalization and token utilities.
//
// normalize_text() defines the single canonical form used everywhere a
// piece of text is hashed, embedded, deduplicated or compared:
//   1. Unicode NFC normalization,
//   2. lowercasing (simple per-code-point mapping, locale independent),
//   3. runs of Unicode whitespace collapsed to one ASCII space,
//   4. leading/trailing whitespace removed.
// Punctuation is retained.  The function is idempotent.

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "synthweave/common.hpp"

namespace synthweave {

inline std::string normalize_text(std::string_view raw) {
  if (raw.empty()) return std::string();

  icu::UnicodeString us = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || nfc == nullptr)
    throw IntegrityError("ICU NFC normalizer unavailable");
  icu::UnicodeString composed = nfc->normalize(us, status);
  if (U_FAILURE(status)) throw ParseError("Unicode normalization failed");

  // Lowercase + whitespace collapse in one pass over code points.
  icu::UnicodeString out;
  out.getBuffer(composed.length());  // reserve
  out.releaseBuffer(0);
  bool pending_space = false;
  bool emitted_any = false;
  for (int32_t i = 0; i < composed.length();) {
    UChar32 cp = composed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      pending_space = emitted_any;  // drop leading whitespace
      continue;
    }
    if (pending_space) {
      out.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    out.append(u_tolower(cp));
    emitted_any = true;
  }

  std::string utf8;
  out.toUTF8String(utf8);
  return utf8;
}

// Whitespace-splits an already-normalized string (tokens are separated by
// exactly one ASCII space after normalize_text).  Punctuation stays glued
// to its word; that is intentional for shingling.
inline std::vector<std::string> words(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t space = normalized.find(' ', pos);
    if (space == std::string_view::npos) space = normalized.size();
    if (space > pos) out.emplace_back(normalized.substr(pos, space - pos));
    pos = space + 1;
  }
  return out;
}

// Contiguous word n-grams, joined with single spaces.  Fewer than n
// tokens yields an empty list.
inline std::vector<std::string> word_ngrams(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<std::string> out;
  if (n == 0) throw ArgumentError("word_ngrams: n must be > 0");
  if (tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string gram = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      gram += ' ';
      gram += tokens[i + j];
    }
    out.push_back(std::move(gram));
  }
  return out;
}

// Set of word n-grams ("shingles") of a normalized string.
inline std::set<std::string> shingle_set(std::string_view normalized,
                                         std::size_t n) {
  std::set<std::string> out;
  for (auto& gram : word_ngrams(words(normalized), n))
    out.insert(std::move(gram));
  return out;
}

// First max_codepoints code points of a UTF-8 string (head truncation
// that never splits a multi-byte sequence).
inline std::string utf8_head(std::string_view s, std::size_t max_codepoints) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < s.size() && count < max_codepoints) {
    unsigned char lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (lead >= 0xf0)
      len = 4;
    else if (lead >= 0xe0)
      len = 3;
    else if (lead >= 0xc0)
      len = 2;
    if (i + len > s.size()) break;  // truncated/invalid tail: stop cleanly
    i += len;
    ++count;
  }
  return std::string(s.substr(0, i));
}

// Jaccard similarity of two sets.  Both sets empty => 0.0 (treated as
// "no shared content" rather than trivially identical).
inline double jaccard(const std::set<std::string>& a,
                      const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace synthweave
