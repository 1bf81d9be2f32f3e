#pragma once

#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/text/utf8.hpp"

namespace mtme {

// Non-empty, whitespace-free text units.
using TokenList = std::vector<std::string>;

namespace detail {

inline bool isDigit(char c) { return c >= '0' && c <= '9'; }

// ASCII symbols the 13a scheme always splits off: { | } ~ [ \ ] ^ _ ` space..& ( ) * + : ; < = > ? @ /
inline bool is13aSymbol(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '{' && u <= '~') || (u >= '[' && u <= '`') || (u >= ' ' && u <= '&') ||
         (u >= '(' && u <= '+') || (u >= ':' && u <= '@') || u == '/';
}

inline void replaceAll(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Emulates a left-to-right, non-overlapping substitution of a two-character
// pattern (first, second) -> emit(first, second).
template <class Match, class Emit>
std::string substitutePairs(const std::string& in, Match match, Emit emit) {
  std::string out;
  out.reserve(in.size() + in.size() / 4);
  std::size_t i = 0;
  while (i < in.size()) {
    if (i + 1 < in.size() && match(in[i], in[i + 1])) {
      emit(out, in[i], in[i + 1]);
      i += 2;
    } else {
      out.push_back(in[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace detail

// The mteval-v13a tokenization used by sentence BLEU: entity unescaping,
// symbol splitting, period/comma splitting except around digits, and a dash
// split after digits. Case is preserved.
inline TokenList tokenize13a(std::string_view text) {
  std::string line(text);
  detail::replaceAll(line, "<skipped>", "");
  detail::replaceAll(line, "-\n", "");
  for (char& c : line) {
    if (c == '\n') c = ' ';
  }
  if (line.find('&') != std::string::npos) {
    detail::replaceAll(line, "&quot;", "\"");
    detail::replaceAll(line, "&amp;", "&");
    detail::replaceAll(line, "&lt;", "<");
    detail::replaceAll(line, "&gt;", ">");
  }

  std::string spaced;
  spaced.reserve(line.size() * 2 + 2);
  spaced.push_back(' ');
  for (char c : line) {
    if (detail::is13aSymbol(c)) {
      spaced.push_back(' ');
      spaced.push_back(c);
      spaced.push_back(' ');
    } else {
      spaced.push_back(c);
    }
  }
  spaced.push_back(' ');

  // A period or comma stays attached only when both neighbours are digits.
  std::string split;
  split.reserve(spaced.size() * 2);
  for (std::size_t i = 0; i < spaced.size(); ++i) {
    const char c = spaced[i];
    const bool numeric = i > 0 && i + 1 < spaced.size() && detail::isDigit(spaced[i - 1]) && detail::isDigit(spaced[i + 1]);
    if ((c == '.' || c == ',') && !numeric) {
      split.push_back(' ');
      split.push_back(c);
      split.push_back(' ');
    } else {
      split.push_back(c);
    }
  }
  spaced = std::move(split);
  spaced = detail::substitutePairs(
      spaced, [](char a, char b) { return detail::isDigit(a) && b == '-'; },
      [](std::string& o, char a, char b) {
        o.push_back(a);
        o.push_back(' ');
        o.push_back(b);
        o.push_back(' ');
      });
  return utf8::splitWhitespace(spaced);
}

// Tercom-style tokenization: lowercase, every ASCII punctuation mark becomes
// its own token, except periods and commas between two digits.
inline TokenList tokenizeTercom(std::string_view text) {
  const std::string lower = utf8::toLower(text);
  std::string spaced;
  spaced.reserve(lower.size() * 2);
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const char c = lower[i];
    const auto u = static_cast<unsigned char>(c);
    const bool punct = u < 0x80 && std::ispunct(u);
    const bool numeric = (c == '.' || c == ',') && i > 0 && i + 1 < lower.size() &&
                         detail::isDigit(lower[i - 1]) && detail::isDigit(lower[i + 1]);
    if (punct && !numeric) {
      spaced.push_back(' ');
      spaced.push_back(c);
      spaced.push_back(' ');
    } else {
      spaced.push_back(c);
    }
  }
  return utf8::splitWhitespace(spaced);
}

// Character n-grams over code points, with multiplicity.
inline std::map<std::string, int> charNgrams(std::string_view text, std::size_t n, bool removeSpace) {
  if (n == 0) throw InvalidArgument("charNgrams: n must be >= 1");
  std::vector<std::string> cps;
  for (auto& cp : utf8::codePoints(text)) {
    if (removeSpace && cp.size() == 1 && utf8::isSpace(cp[0])) continue;
    cps.push_back(std::move(cp));
  }
  std::map<std::string, int> grams;
  if (cps.size() < n) return grams;
  for (std::size_t i = 0; i + n <= cps.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += cps[i + k];
    ++grams[g];
  }
  return grams;
}

inline std::string joinTokens(const TokenList& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace mtme
