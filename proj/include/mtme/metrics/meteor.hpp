#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/metrics/porter.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::vector<int> hypToRef;  // -1 when unaligned
  int matches = 0;
  int chunks = 0;
};

namespace detail {

inline int countChunks(const std::vector<int>& hypToRef) {
  int chunks = 0;
  for (std::size_t i = 0; i < hypToRef.size(); ++i) {
    if (hypToRef[i] < 0) continue;
    const bool continues = i > 0 && hypToRef[i - 1] >= 0 && hypToRef[i - 1] + 1 == hypToRef[i];
    if (!continues) ++chunks;
  }
  return chunks;
}

// Extends a partial alignment with pairs whose keys are equal. The result has
// the largest possible number of new matches and, among those, the fewest
// chunks found within the node budget (exhaustive for short sentences).
class StageAligner {
 public:
  StageAligner(const std::vector<std::string>& hypKeys, const std::vector<std::string>& refKeys,
               std::vector<int> fixed, std::size_t nodeBudget)
      : hk_(hypKeys), rk_(refKeys), align_(std::move(fixed)), budget_(nodeBudget) {
    refUsed_.assign(rk_.size(), false);
    for (int r : align_) {
      if (r >= 0) refUsed_[static_cast<std::size_t>(r)] = true;
    }
    std::map<std::string, int> hypFree, refFree;
    for (std::size_t i = 0; i < hk_.size(); ++i) {
      if (align_[i] < 0) ++hypFree[hk_[i]];
    }
    for (std::size_t j = 0; j < rk_.size(); ++j) {
      if (!refUsed_[j]) ++refFree[rk_[j]];
    }
    for (const auto& [key, hc] : hypFree) {
      auto it = refFree.find(key);
      const int rc = it == refFree.end() ? 0 : it->second;
      skips_[key] = hc - std::min(hc, rc);
    }
  }

  std::vector<int> run() {
    best_ = align_;
    bestChunks_ = -1;
    search(0, 0);
    return best_;
  }

 private:
  void search(std::size_t i, int chunks) {
    if (bestChunks_ >= 0 && (chunks >= bestChunks_ || nodes_ >= budget_)) return;
    ++nodes_;
    if (i == hk_.size()) {
      best_ = align_;
      bestChunks_ = chunks;
      return;
    }
    const int prev = i > 0 ? align_[i - 1] : -2;
    const auto startsChunk = [&](int j) { return !(prev >= 0 && prev + 1 == j); };
    if (align_[i] >= 0) {  // fixed by an earlier stage
      search(i + 1, chunks + (startsChunk(align_[i]) ? 1 : 0));
      return;
    }
    // Candidates ordered by closeness to continuing the current chunk.
    std::vector<int> cands;
    for (std::size_t j = 0; j < rk_.size(); ++j) {
      if (!refUsed_[j] && rk_[j] == hk_[i]) cands.push_back(static_cast<int>(j));
    }
    const int want = prev >= 0 ? prev + 1 : 0;
    std::stable_sort(cands.begin(), cands.end(),
                     [&](int a, int b) { return std::abs(a - want) < std::abs(b - want); });
    for (int j : cands) {
      refUsed_[static_cast<std::size_t>(j)] = true;
      align_[i] = j;
      search(i + 1, chunks + (startsChunk(j) ? 1 : 0));
      align_[i] = -1;
      refUsed_[static_cast<std::size_t>(j)] = false;
    }
    auto it = skips_.find(hk_[i]);
    if (it == skips_.end() || it->second > 0) {
      if (it != skips_.end()) --it->second;
      search(i + 1, chunks);
      if (it != skips_.end()) ++it->second;
    }
  }

  const std::vector<std::string>& hk_;
  const std::vector<std::string>& rk_;
  std::vector<int> align_;
  std::vector<bool> refUsed_;
  std::map<std::string, int> skips_;
  std::vector<int> best_;
  int bestChunks_ = -1;
  std::size_t nodes_ = 0;
  std::size_t budget_;
};

inline TokenList meteorTokens(std::string_view text) { return tokenize13a(utf8::toLower(text)); }

}  // namespace detail

// Exact-match stage followed by a Porter-stem stage.
inline MeteorAlignment meteorAlign(const TokenList& hyp, const TokenList& ref, std::size_t nodeBudget = 200000) {
  std::vector<int> align(hyp.size(), -1);
  align = detail::StageAligner(hyp, ref, align, nodeBudget).run();
  std::vector<std::string> hs, rs;
  for (const auto& t : hyp) hs.push_back(porterStem(t));
  for (const auto& t : ref) rs.push_back(porterStem(t));
  align = detail::StageAligner(hs, rs, align, nodeBudget).run();
  MeteorAlignment out;
  out.hypToRef = align;
  out.matches = static_cast<int>(std::count_if(align.begin(), align.end(), [](int r) { return r >= 0; }));
  out.chunks = detail::countChunks(align);
  return out;
}

// METEOR restricted to exact and stem matching, on lowercased 13a tokens.
inline double meteorLiteValue(std::string_view hyp, std::string_view ref, const MeteorParams& p = {}) {
  const auto r = detail::meteorTokens(ref);
  if (r.empty()) throw InvalidArgument("meteor: empty reference");
  const auto h = detail::meteorTokens(hyp);
  if (h.empty()) return 0.0;
  const auto a = meteorAlign(h, r);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double prec = m / static_cast<double>(h.size());
  const double rec = m / static_cast<double>(r.size());
  const double fmean = prec * rec / (p.alpha * prec + (1.0 - p.alpha) * rec);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
  return fmean * (1.0 - penalty);
}

}  // namespace mtme
