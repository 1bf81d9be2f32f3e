#pragma once

#include <algorithm>
#include <cstdlib>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

struct TerOptions {
  std::size_t maxShiftSize = 10;
  std::size_t maxShiftDistance = 50;
};

struct TerResult {
  int edits = 0;   // Levenshtein distance after all shifts
  int shifts = 0;  // block moves, each costing one edit
  int refLength = 0;
  double score() const { return static_cast<double>(edits + shifts) / refLength; }
};

// Unit-cost insert/delete/substitute distance.
inline int editDistance(std::span<const int> a, std::span<const int> b) {
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1] ? 1 : 0)});
      diag = up;
    }
  }
  return row[b.size()];
}

// Moves cur[start, start+len) so that it begins at index dest of the sequence
// with the block removed.
inline std::vector<int> applyShift(std::span<const int> cur, std::size_t start, std::size_t len, std::size_t dest) {
  std::vector<int> rest;
  rest.reserve(cur.size());
  rest.insert(rest.end(), cur.begin(), cur.begin() + static_cast<long>(start));
  rest.insert(rest.end(), cur.begin() + static_cast<long>(start + len), cur.end());
  std::vector<int> out;
  out.reserve(cur.size());
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<long>(dest));
  out.insert(out.end(), cur.begin() + static_cast<long>(start), cur.begin() + static_cast<long>(start + len));
  out.insert(out.end(), rest.begin() + static_cast<long>(dest), rest.end());
  return out;
}

// Greedy shift search over integer token ids. Each round applies the shift
// giving the lowest edit distance, provided it saves more than its own cost.
// Candidate blocks must occur contiguously in the reference. Ties prefer longer
// blocks, then earlier blocks, then earlier destinations.
inline TerResult terIds(std::span<const int> hyp, std::span<const int> ref, const TerOptions& opt = {}) {
  if (ref.empty()) throw InvalidArgument("ter: empty reference");
  std::set<std::vector<int>> refBlocks;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t len = 1; len <= opt.maxShiftSize && i + len <= ref.size(); ++len) {
      refBlocks.emplace(ref.begin() + static_cast<long>(i), ref.begin() + static_cast<long>(i + len));
    }
  }

  std::vector<int> cur(hyp.begin(), hyp.end());
  int edits = editDistance(cur, ref);
  int shifts = 0;
  while (edits > 1) {
    int bestEdits = edits - 1;  // a shift must bring the total down
    std::vector<int> bestSeq;
    const std::size_t n = cur.size();
    for (std::size_t len = std::min(opt.maxShiftSize, n); len >= 1; --len) {
      for (std::size_t i = 0; i + len <= n; ++i) {
        const std::vector<int> block(cur.begin() + static_cast<long>(i), cur.begin() + static_cast<long>(i + len));
        if (!refBlocks.count(block)) continue;
        for (std::size_t dest = 0; dest + len <= n; ++dest) {
          if (dest == i) continue;
          const std::size_t dist = dest > i ? dest - i : i - dest;
          if (dist > opt.maxShiftDistance) continue;
          auto cand = applyShift(cur, i, len, dest);
          const int e = editDistance(cand, ref);
          if (e + 1 < edits && e < bestEdits) {
            bestEdits = e;
            bestSeq = std::move(cand);
          }
        }
      }
    }
    if (bestSeq.empty()) break;
    cur = std::move(bestSeq);
    edits = bestEdits;
    ++shifts;
  }
  return {edits, shifts, static_cast<int>(ref.size())};
}

inline TerResult terTokens(const TokenList& hyp, const TokenList& ref, const TerOptions& opt = {}) {
  std::unordered_map<std::string, int> ids;
  const auto intern = [&](const TokenList& toks) {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return out;
  };
  const auto r = intern(ref);
  const auto h = intern(hyp);
  return terIds(h, r, opt);
}

inline double terValue(std::string_view hyp, std::string_view ref) {
  const auto r = tokenizeTercom(ref);
  if (r.empty()) throw InvalidArgument("ter: empty reference");
  return terTokens(tokenizeTercom(hyp), r).score();
}

}  // namespace mtme
