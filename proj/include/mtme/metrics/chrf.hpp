#pragma once

#include <algorithm>
#include <string_view>

#include "mtme/error.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

// chrF with character order 6, no word n-grams, whitespace removed, beta 2.
// Precision and recall are averaged over orders present on both sides before
// the F-score is taken.
inline double chrFValue(std::string_view hyp, std::string_view ref, std::size_t order = 6, double beta = 2.0) {
  const auto refTrim = utf8::splitWhitespace(ref);
  if (refTrim.empty()) throw InvalidArgument("chrF: empty reference");
  if (utf8::splitWhitespace(hyp).empty()) return 0.0;

  double avgPrec = 0.0, avgRec = 0.0;
  int effective = 0;
  for (std::size_t n = 1; n <= order; ++n) {
    const auto h = charNgrams(hyp, n, true);
    const auto r = charNgrams(ref, n, true);
    long nh = 0, nr = 0, match = 0;
    for (const auto& [g, c] : h) {
      nh += c;
      auto it = r.find(g);
      if (it != r.end()) match += std::min(c, it->second);
    }
    for (const auto& [g, c] : r) nr += c;
    if (nh > 0 && nr > 0) {
      avgPrec += static_cast<double>(match) / nh;
      avgRec += static_cast<double>(match) / nr;
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avgPrec /= effective;
  avgRec /= effective;
  if (avgPrec + avgRec <= 0.0) return 0.0;
  const double f = beta * beta;
  return (1.0 + f) * avgPrec * avgRec / (f * avgPrec + avgRec);
}

}  // namespace mtme
