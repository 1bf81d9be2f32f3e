#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/metrics/bleu.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

struct DecoderConfidence {
  double logprob = 0.0;
  double prob = 1.0;
};

inline DecoderConfidence decoderConfidence(std::span<const double> tokenLogprobs) {
  if (tokenLogprobs.empty()) throw InvalidArgument("decoderConfidence: empty token log-probabilities");
  const double lp = std::accumulate(tokenLogprobs.begin(), tokenLogprobs.end(), 0.0);
  return {lp, std::exp(lp)};
}

// Aggregate log-probability supplied without token detail.
inline DecoderConfidence decoderConfidence(double logprob) { return {logprob, std::exp(logprob)}; }

// Token detail wins over the stored aggregate when both are present.
inline DecoderConfidence decoderConfidence(const Hypothesis& h) {
  if (h.tokenLogprobs && !h.tokenLogprobs->empty()) return decoderConfidence(*h.tokenLogprobs);
  if (h.logprob) return decoderConfidence(*h.logprob);
  throw InvalidArgument("decoderConfidence: hypothesis has no log-probability");
}

struct LengthFeatures {
  double srcLen = 0;
  double hypLen = 0;
  double lenRatio = 0;
};

inline LengthFeatures lengthFeatures(std::string_view src, std::string_view hyp) {
  const auto s = tokenize13a(src).size();
  if (s == 0) throw InvalidArgument("lengthFeatures: empty source");
  const auto h = tokenize13a(hyp).size();
  return {static_cast<double>(s), static_cast<double>(h), static_cast<double>(h) / static_cast<double>(s)};
}

struct HypSpaceFeatures {
  double avgH1 = 0;
  double varH1 = 0;
  double avgAll = 0;
  double varAll = 0;
  bool degenerate = false;
};

namespace detail {

// sentBLEU between two n-best entries, total over empty texts.
inline double pairBleu(const TokenList& hyp, const TokenList& ref) {
  if (ref.empty()) return hyp.empty() ? 1.0 : 0.0;
  return sentBleuTokens(hyp, ref);
}

inline std::pair<double, double> meanPopVar(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

}  // namespace detail

// Pairwise sentBLEU statistics over one n-best list, computed once and then
// queried per focus hypothesis.
class HypSpace {
 public:
  explicit HypSpace(const std::vector<std::string>& hyps) {
    const std::size_t n = hyps.size();
    std::vector<TokenList> toks;
    toks.reserve(n);
    for (const auto& h : hyps) toks.push_back(tokenize13a(h));
    bleu_.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) bleu_[i][j] = detail::pairBleu(toks[i], toks[j]);
      }
    }
    if (n < 2) return;
    // All pairs (i < j in text order), h_i scored against h_j.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return hyps[a] < hyps[b]; });
    std::vector<double> all;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) all.push_back(bleu_[order[a]][order[b]]);
    }
    std::tie(avgAll_, varAll_) = detail::meanPopVar(all);
  }

  std::size_t size() const { return bleu_.size(); }

  HypSpaceFeatures features(std::size_t focus) const {
    if (focus >= size()) throw InvalidArgument("hypSpaceFeatures: focus index out of range");
    HypSpaceFeatures f;
    if (size() < 2) {
      f.degenerate = true;
      return f;
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < size(); ++j) {
      if (j != focus) row.push_back(bleu_[focus][j]);
    }
    std::tie(f.avgH1, f.varH1) = detail::meanPopVar(row);
    f.avgAll = avgAll_;
    f.varAll = varAll_;
    return f;
  }

 private:
  std::vector<std::vector<double>> bleu_;
  double avgAll_ = 0;
  double varAll_ = 0;
};

inline HypSpaceFeatures hypSpaceFeatures(const std::vector<std::string>& hyps, std::size_t focusIndex) {
  if (hyps.empty()) throw InvalidArgument("hypSpaceFeatures: empty hypothesis list");
  return HypSpace(hyps).features(focusIndex);
}

enum class FeatureSet { None, Default6, Extended9 };

inline std::size_t featureDim(FeatureSet f) {
  switch (f) {
    case FeatureSet::None: return 0;
    case FeatureSet::Default6: return 6;
    case FeatureSet::Extended9: return 9;
  }
  return 0;
}

inline std::string_view toString(FeatureSet f) {
  switch (f) {
    case FeatureSet::None: return "none";
    case FeatureSet::Default6: return "default6";
    case FeatureSet::Extended9: return "extended9";
  }
  return "none";
}

inline FeatureSet parseFeatureSet(std::string_view name) {
  for (auto f : {FeatureSet::None, FeatureSet::Default6, FeatureSet::Extended9}) {
    if (toString(f) == name) return f;
  }
  throw InvalidArgument("unknown feature set '" + std::string(name) + "'");
}

inline std::vector<std::string> featureNames(FeatureSet f) {
  std::vector<std::string> names;
  if (f == FeatureSet::None) return names;
  names = {"logprob", "prob", "src_len", "hyp_len", "len_ratio", "hyp_var_h1"};
  if (f == FeatureSet::Extended9) {
    names.insert(names.end(), {"hyp_avg_h1", "hyp_avg_all", "hyp_var_all"});
  }
  return names;
}

inline std::vector<double> assembleFeatures(const DecoderConfidence& conf, const LengthFeatures& len,
                                            const HypSpaceFeatures& hs, FeatureSet set) {
  std::vector<double> v;
  if (set == FeatureSet::None) return v;
  v = {conf.logprob, conf.prob, len.srcLen, len.hypLen, len.lenRatio, hs.varH1};
  if (set == FeatureSet::Extended9) v.insert(v.end(), {hs.avgH1, hs.avgAll, hs.varAll});
  return v;
}

inline std::vector<std::string> hypothesisTexts(const Segment& seg) {
  std::vector<std::string> texts;
  texts.reserve(seg.hyps.size());
  for (const auto& h : seg.hyps) texts.push_back(h.text);
  return texts;
}

// Feature vectors for every hypothesis of a segment, sharing one HypSpace.
inline std::vector<std::vector<double>> buildFeatureVectors(const Segment& seg, FeatureSet set) {
  std::vector<std::vector<double>> out(seg.hyps.size());
  if (set == FeatureSet::None) return out;
  if (seg.hyps.empty()) throw InvalidArgument("segment '" + seg.id + "' has no hypotheses");
  const HypSpace space(hypothesisTexts(seg));
  for (std::size_t i = 0; i < seg.hyps.size(); ++i) {
    const auto& h = seg.hyps[i];
    if (!h.logprob && !(h.tokenLogprobs && !h.tokenLogprobs->empty())) {
      throw InvalidArgument("segment '" + seg.id + "' hypothesis " + std::to_string(i) + " lacks log-probabilities");
    }
    out[i] = assembleFeatures(decoderConfidence(h), lengthFeatures(seg.src, h.text), space.features(i), set);
  }
  return out;
}

inline std::vector<double> buildFeatureVector(const Segment& seg, std::size_t hypIndex, FeatureSet set) {
  if (hypIndex >= seg.hyps.size()) throw InvalidArgument("buildFeatureVector: hypothesis index out of range");
  if (set == FeatureSet::None) return {};
  const auto& h = seg.hyps[hypIndex];
  if (!h.logprob && !(h.tokenLogprobs && !h.tokenLogprobs->empty())) {
    throw InvalidArgument("segment '" + seg.id + "' hypothesis " + std::to_string(hypIndex) +
                          " lacks log-probabilities");
  }
  const HypSpace space(hypothesisTexts(seg));
  return assembleFeatures(decoderConfidence(h), lengthFeatures(seg.src, h.text), space.features(hypIndex), set);
}

}  // namespace mtme
