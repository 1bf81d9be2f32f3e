#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

struct BleuStats {
  std::array<int, 4> correct{};
  std::array<int, 4> total{};
  int hypLen = 0;
  int refLen = 0;
};

namespace detail {

inline std::map<std::string, int> ngramCounts(const TokenList& toks, std::size_t n) {
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

inline BleuStats bleuStats(const TokenList& hyp, const TokenList& ref) {
  BleuStats s;
  s.hypLen = static_cast<int>(hyp.size());
  s.refLen = static_cast<int>(ref.size());
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto h = detail::ngramCounts(hyp, n);
    const auto r = detail::ngramCounts(ref, n);
    int total = 0, correct = 0;
    for (const auto& [g, c] : h) {
      total += c;
      auto it = r.find(g);
      if (it != r.end()) correct += std::min(c, it->second);
    }
    s.total[n - 1] = total;
    s.correct[n - 1] = correct;
  }
  return s;
}

// Sentence BLEU on a 0-1 scale with effective order and exponential
// smoothing: the k-th zero-match order gets precision 1 / (2^k * total).
// A hypothesis without any matching unigram scores 0.
inline double bleuFromStats(const BleuStats& s) {
  if (s.hypLen == 0) return 0.0;
  const bool anyMatch = std::any_of(s.correct.begin(), s.correct.end(), [](int c) { return c > 0; });
  if (!anyMatch) return 0.0;
  const double bp = s.hypLen < s.refLen ? std::exp(1.0 - static_cast<double>(s.refLen) / s.hypLen) : 1.0;
  double smooth = 1.0;
  double logSum = 0.0;
  int order = 0;
  for (int n = 0; n < 4; ++n) {
    if (s.total[n] == 0) break;
    order = n + 1;
    double p;
    if (s.correct[n] == 0) {
      smooth *= 2.0;
      p = 1.0 / (smooth * s.total[n]);
    } else {
      p = static_cast<double>(s.correct[n]) / s.total[n];
    }
    logSum += std::log(p);
  }
  return bp * std::exp(logSum / order);
}

inline double sentBleuTokens(const TokenList& hyp, const TokenList& ref) {
  if (ref.empty()) throw InvalidArgument("sentBleu: empty reference");
  return bleuFromStats(bleuStats(hyp, ref));
}

inline double sentBleuValue(std::string_view hyp, std::string_view ref) {
  return sentBleuTokens(tokenize13a(hyp), tokenize13a(ref));
}

}  // namespace mtme
