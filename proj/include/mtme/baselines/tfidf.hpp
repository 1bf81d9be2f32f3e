#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"
#include "mtme/text/tokenize.hpp"

namespace mtme {

struct TfidfDocument {
  std::string src;
  std::string hyp;
};

using SparseVector = std::vector<std::pair<int, double>>;  // sorted by id

struct TfidfModel {
  std::map<std::string, int> vocabulary;
  std::vector<double> idf;  // indexed by id
  long maxFeatures = 0;

  std::size_t dim() const { return idf.size(); }
};

namespace detail {

inline TokenList tfidfTerms(const TfidfDocument& d) { return tokenize13a(d.src + " " + d.hyp); }

}  // namespace detail

// Keeps the maxFeatures terms with the highest document frequency, ties in
// lexicographic order. Ids follow that ranking.
inline TfidfModel tfidfFit(const std::vector<TfidfDocument>& corpus, long maxFeatures) {
  if (corpus.empty()) throw InvalidArgument("tfidfFit: empty corpus");
  if (maxFeatures < 1) throw InvalidArgument("tfidfFit: maxFeatures must be >= 1");
  std::map<std::string, long> df;
  for (const auto& doc : corpus) {
    const auto toks = detail::tfidfTerms(doc);
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) ++df[t];
  }
  std::vector<std::pair<std::string, long>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  TfidfModel m;
  m.maxFeatures = maxFeatures;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [term, count] : ranked) {
    if (static_cast<long>(m.idf.size()) == maxFeatures) break;
    m.vocabulary[term] = static_cast<int>(m.idf.size());
    m.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return m;
}

// Raw term counts times idf, L2-normalized; all-zero when no term is retained.
inline SparseVector tfidfTransform(const TfidfModel& m, const TfidfDocument& doc) {
  std::map<int, double> counts;
  for (const auto& t : detail::tfidfTerms(doc)) {
    auto it = m.vocabulary.find(t);
    if (it != m.vocabulary.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  double norm = 0;
  for (const auto& [id, c] : counts) {
    const double x = c * m.idf[static_cast<std::size_t>(id)];
    v.emplace_back(id, x);
    norm += x * x;
  }
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (auto& [id, x] : v) x /= norm;
  }
  return v;
}

inline nlohmann::json toJson(const TfidfModel& m) {
  std::vector<std::string> terms(m.idf.size());
  for (const auto& [t, id] : m.vocabulary) terms[static_cast<std::size_t>(id)] = t;
  return {{"max_features", m.maxFeatures}, {"terms", terms}, {"idf", m.idf}};
}

inline TfidfModel tfidfFromJson(const nlohmann::json& j) {
  TfidfModel m;
  try {
    m.maxFeatures = j.at("max_features").get<long>();
    const auto terms = j.at("terms").get<std::vector<std::string>>();
    m.idf = j.at("idf").get<std::vector<double>>();
    if (terms.size() != m.idf.size()) throw InvalidArgument("tfidf: terms and idf differ in length");
    for (std::size_t i = 0; i < terms.size(); ++i) m.vocabulary[terms[i]] = static_cast<int>(i);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("tfidf: ") + e.what());
  }
  return m;
}

}  // namespace mtme
