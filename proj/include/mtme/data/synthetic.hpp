#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/text/tokenize.hpp"
#include "mtme/util/rng.hpp"

namespace mtme {

struct SyntheticOptions {
  std::size_t segments = 1000;
  std::size_t hypsPerSegment = 5;
  std::size_t vocabulary = 300;  // words per language
  double noise = 0.02;           // half-width of the uniform target noise
  std::uint64_t seed = 1;
};

// Score key of the generated metric-like target.
inline const std::string kSyntheticMetric = "external:synthetic";

// Smooth target of decoder confidence and length ratio, in (0, 0.9).
inline double syntheticTarget(double logprob, double lenRatio) {
  const double conf = 1.0 / (1.0 + std::exp(-0.4 * (logprob + 8.0)));
  return 0.9 * conf * std::exp(-(lenRatio - 1.0) * (lenRatio - 1.0));
}

namespace detail {

inline std::vector<std::string> syllableWords(std::size_t n, const std::vector<std::string>& onsets,
                                              const std::vector<std::string>& nuclei, Rng& rng) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < n) {
    std::string w;
    const auto syl = 1 + rng.below(3);
    for (std::uint64_t k = 0; k < syl; ++k) w += onsets[rng.below(onsets.size())] + nuclei[rng.below(nuclei.size())];
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

}  // namespace detail

// Parallel corpus with a word-for-word reference and n-best hypotheses of
// decreasing quality. Each hypothesis carries a log-probability tied to its
// corruption rate, a metric-like target under kSyntheticMetric, and a noisy
// "human" judgement correlated with that target (raw score plus annotator).
inline Dataset generateSynthetic(const SyntheticOptions& opt) {
  if (opt.segments < 1 || opt.hypsPerSegment < 1 || opt.vocabulary < 2) {
    throw InvalidArgument("generateSynthetic: sizes must be positive");
  }
  Rng rng(opt.seed);
  Rng lex = rng.fork(1);
  const auto srcWords = detail::syllableWords(opt.vocabulary, {"k", "t", "p", "s", "m", "n", "r", "l"},
                                              {"a", "e", "i", "o", "u"}, lex);
  const auto tgtWords = detail::syllableWords(opt.vocabulary, {"b", "d", "g", "v", "z", "h", "w", "f", "sch"},
                                              {"a", "ei", "o", "au", "\xc3\xa4", "\xc3\xbc"}, lex);
  const std::vector<std::string> annotators{"A1", "A2", "A3", "A4"};
  const double annotatorShift[] = {0.0, 10.0, -5.0, 20.0};
  const double annotatorScale[] = {50.0, 30.0, 40.0, 60.0};

  Dataset out;
  for (std::size_t s = 0; s < opt.segments; ++s) {
    const std::size_t len = 4 + rng.below(9);
    std::vector<std::size_t> words(len);
    for (auto& w : words) w = rng.below(opt.vocabulary);
    Segment seg;
    seg.id = "syn" + std::to_string(s);
    std::string src, ref;
    for (std::size_t i = 0; i < len; ++i) {
      src += (i ? " " : "") + srcWords[words[i]];
      ref += (i ? " " : "") + tgtWords[words[i]];
    }
    src += ".";
    ref += ".";
    seg.src = src;
    seg.ref = ref;

    std::vector<double> quality(opt.hypsPerSegment);
    for (auto& q : quality) q = rng.uniform();
    std::sort(quality.begin(), quality.end(), std::greater<>());
    for (double q : quality) {
      const double err = 0.6 * (1.0 - q);
      std::vector<std::string> toks;
      for (std::size_t i = 0; i < len; ++i) {
        const double u = rng.uniform();
        if (u < err / 4) continue;  // dropped
        toks.push_back(u < err ? tgtWords[rng.below(opt.vocabulary)] : tgtWords[words[i]]);
        if (rng.uniform() < err / 4) toks.push_back(tgtWords[rng.below(opt.vocabulary)]);
      }
      if (toks.empty()) toks.push_back(tgtWords[words[0]]);
      Hypothesis h;
      h.text = joinTokens(toks) + ".";
      std::vector<double> tlp;
      for (std::size_t i = 0; i <= toks.size(); ++i) tlp.push_back(-(0.25 + 1.2 * err) * (0.8 + 0.4 * rng.uniform()));
      h.tokenLogprobs = tlp;
      double lp = 0;
      for (double x : tlp) lp += x;
      h.logprob = lp;
      const double ratio = static_cast<double>(tokenize13a(h.text).size()) / static_cast<double>(len + 1);
      const double target = syntheticTarget(lp, ratio) + opt.noise * (2 * rng.uniform() - 1);
      h.scores[kSyntheticMetric] = target;
      const std::size_t a = rng.below(annotators.size());
      const double latent = 4.0 * target + 0.25 * rng.normal();
      h.humanRaw = annotatorShift[a] + annotatorScale[a] * latent;
      h.annotator = annotators[a];
      seg.hyps.push_back(std::move(h));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace mtme
