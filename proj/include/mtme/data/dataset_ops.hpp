#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/features/glassbox.hpp"
#include "mtme/metrics/metrics.hpp"
#include "mtme/model/example.hpp"
#include "mtme/stats/stats.hpp"
#include "mtme/util/rng.hpp"

namespace mtme {

namespace detail {

inline std::vector<std::string> splitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parseDouble(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
}

inline long parseLong(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
}

inline std::vector<std::string> readLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// Groups n-best lines (srcIdx, rank, logprob, token logprobs, text) under
// their sources. Sources without hypotheses are skipped.
inline Dataset ingestNbest(const std::vector<std::string>& sources, std::istream& nbest,
                           const std::vector<std::string>* refs = nullptr) {
  if (refs && refs->size() != sources.size()) {
    throw InvalidArgument("reference count " + std::to_string(refs->size()) + " differs from source count " +
                          std::to_string(sources.size()));
  }
  std::vector<std::vector<Hypothesis>> hyps(sources.size());
  std::vector<long> lastRank(sources.size(), -1);
  std::string line;
  std::size_t n = 0;
  while (std::getline(nbest, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::splitTabs(line);
    if (f.size() != 5) throw ParseError(n, "expected 5 tab-separated fields, found " + std::to_string(f.size()));
    const long idx = detail::parseLong(f[0], n, "source index");
    if (idx < 0 || static_cast<std::size_t>(idx) >= sources.size()) {
      throw ParseError(n, "source index " + f[0] + " outside the " + std::to_string(sources.size()) + " sources");
    }
    const long rank = detail::parseLong(f[1], n, "rank");
    auto& last = lastRank[static_cast<std::size_t>(idx)];
    if (rank <= last) throw ParseError(n, "rank " + f[1] + " does not increase for source " + f[0]);
    last = rank;
    Hypothesis h;
    h.text = f[4];
    h.logprob = detail::parseDouble(f[2], n, "logprob");
    if (!f[3].empty()) {
      std::vector<double> toks;
      std::stringstream ss(f[3]);
      std::string item;
      while (std::getline(ss, item, ',')) toks.push_back(detail::parseDouble(item, n, "token logprob"));
      h.tokenLogprobs = std::move(toks);
    }
    hyps[static_cast<std::size_t>(idx)].push_back(std::move(h));
  }
  Dataset out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (hyps[i].empty()) continue;
    Segment s{std::to_string(i), sources[i], std::nullopt, std::move(hyps[i])};
    if (refs) s.ref = (*refs)[i];
    out.push_back(std::move(s));
  }
  return out;
}

inline Dataset ingestNbest(const std::string& srcPath, const std::string& nbestPath, const std::string& refPath = "") {
  const auto sources = detail::readLines(srcPath);
  std::ifstream nb(nbestPath);
  if (!nb) throw InvalidArgument("cannot read '" + nbestPath + "'");
  if (refPath.empty()) return ingestNbest(sources, nb);
  const auto refs = detail::readLines(refPath);
  return ingestNbest(sources, nb, &refs);
}

// Fills hyps[i].scores[m] for every requested metric.
inline void computeMetricColumns(Dataset& data, const std::vector<std::string>& metrics) {
  for (const auto& m : metrics) {
    if (!isComputableMetric(m)) throw InvalidArgument("metric '" + m + "' cannot be computed");
  }
  std::string missing;
  for (const auto& s : data) {
    if (!s.ref) missing += (missing.empty() ? "" : ", ") + s.id;
  }
  if (!missing.empty()) throw InvalidArgument("segments without reference: " + missing);
  for (auto& s : data) {
    for (auto& h : s.hyps) {
      for (const auto& m : metrics) h.scores[m] = scoreOne(m, h.text, *s.ref).value;
    }
  }
}

// Fills human_z from human_raw and annotator where human_z is absent.
// Returns the number of annotators whose scores could not be standardized.
inline int deriveHumanZ(Dataset& data) {
  std::vector<ScoreWithAnnotator> raw;
  std::vector<Hypothesis*> owners;
  for (auto& s : data) {
    for (auto& h : s.hyps) {
      if (h.humanRaw && h.annotator) {
        raw.push_back({*h.annotator, *h.humanRaw});
        owners.push_back(&h);
      }
    }
  }
  const auto z = zScores(raw);
  for (std::size_t i = 0; i < owners.size(); ++i) {
    if (!owners[i]->humanZ) owners[i]->humanZ = z.z[i];
  }
  return z.degenerateAnnotators;
}

struct TrainingPair {
  std::string segmentId;
  std::size_t hypIndex = 0;
  std::string src;
  std::string hyp;
  std::optional<std::string> ref;
  std::map<std::string, double> scores;
  std::optional<double> humanZ;
  std::vector<double> features;
};

// One pair per hypothesis among the top k of every segment; hypothesis-space
// features are computed per segment with each pair's hypothesis as focus.
inline std::vector<TrainingPair> expandHypotheses(const Dataset& data, std::size_t k,
                                                  FeatureSet features = FeatureSet::Extended9) {
  if (k < 1) throw InvalidArgument("expandHypotheses: k must be >= 1");
  std::vector<TrainingPair> out;
  for (const auto& s : data) {
    const std::size_t n = std::min(k, s.hyps.size());
    const auto feats = buildFeatureVectors(s, features);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& h = s.hyps[i];
      out.push_back({s.id, i, s.src, h.text, s.ref, h.scores, h.humanZ, feats[i]});
    }
  }
  return out;
}

// Model examples for the top k hypotheses of every segment.
inline std::vector<Example> makeExamples(const Dataset& data, std::size_t k, const MeModelConfig& cfg,
                                         const BpeModel& bpe) {
  if (k < 1) throw InvalidArgument("makeExamples: k must be >= 1");
  std::vector<Example> out;
  for (const auto& s : data) {
    for (auto& ex : segmentExamples(s, k, cfg, bpe)) out.push_back(std::move(ex));
  }
  return out;
}

// Seeded sample without replacement; n >= size returns a shuffled copy.
inline Dataset subsample(const Dataset& data, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("subsample: n must be >= 1");
  Rng rng(seed);
  const auto perm = rng.permutation(data.size());
  Dataset out;
  for (std::size_t i = 0; i < std::min(n, data.size()); ++i) out.push_back(data[perm[i]]);
  return out;
}

struct Split {
  Dataset train;
  Dataset dev;
};

// Segment-level seeded split into disjoint train and dev parts.
inline Split splitDataset(const Dataset& data, std::size_t devCount, std::uint64_t seed) {
  if (devCount >= data.size()) {
    throw InvalidArgument("splitDataset: dev count " + std::to_string(devCount) + " must be below dataset size " +
                          std::to_string(data.size()));
  }
  Rng rng(seed);
  const auto perm = rng.permutation(data.size());
  std::vector<char> isDev(data.size(), 0);
  for (std::size_t i = 0; i < devCount; ++i) isDev[perm[i]] = 1;
  Split out;
  for (std::size_t i = 0; i < data.size(); ++i) (isDev[i] ? out.dev : out.train).push_back(data[i]);
  return out;
}

}  // namespace mtme
