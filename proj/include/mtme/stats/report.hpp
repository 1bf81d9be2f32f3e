#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"
#include "mtme/stats/stats.hpp"

namespace mtme {

struct CorrelationRow {
  std::string target;
  std::size_t n = 0;
  std::optional<double> pearson;  // empty when the row is degenerate
  std::string note;

  std::optional<double> pearsonAbs() const {
    if (!pearson) return std::nullopt;
    return std::fabs(*pearson);
  }
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  std::map<std::string, std::string> metadata;  // dataset id, checkpoint id, seed, ...
};

// Id-keyed values for one target.
using KeyedValues = std::map<std::string, double>;

inline CorrelationRow correlationRow(const std::string& target, const KeyedValues& predicted, const KeyedValues& gold) {
  if (predicted.size() != gold.size()) throw InvalidArgument("correlationReport: id sets differ for target " + target);
  std::vector<double> p, g;
  for (const auto& [id, v] : predicted) {
    auto it = gold.find(id);
    if (it == gold.end()) throw InvalidArgument("correlationReport: id '" + id + "' has no gold value for " + target);
    p.push_back(v);
    g.push_back(it->second);
  }
  CorrelationRow row{target, p.size(), std::nullopt, ""};
  if (p.size() < 2) {
    row.note = "fewer than two items";
    return row;
  }
  try {
    row.pearson = pearson(p, g);
  } catch (const DegenerateInput&) {
    row.note = "zero variance";
  }
  return row;
}

inline CorrelationReport correlationReport(const std::map<std::string, KeyedValues>& predictionsByTarget,
                                           const std::map<std::string, KeyedValues>& goldByTarget) {
  CorrelationReport report;
  for (const auto& [target, preds] : predictionsByTarget) {
    auto it = goldByTarget.find(target);
    if (it == goldByTarget.end()) throw InvalidArgument("correlationReport: no gold values for target " + target);
    report.rows.push_back(correlationRow(target, preds, it->second));
  }
  return report;
}

inline std::string formatFixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string out = buf;
  if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

inline std::string toTsv(const CorrelationReport& r) {
  std::ostringstream out;
  out << "target\tn\tpearson\tpearson_abs\n";
  for (const auto& row : r.rows) {
    out << row.target << '\t' << row.n << '\t' << (row.pearson ? formatFixed(*row.pearson) : "nan") << '\t'
        << (row.pearson ? formatFixed(*row.pearsonAbs()) : "nan") << '\n';
  }
  return out.str();
}

inline nlohmann::json toJson(const CorrelationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j{{"target", row.target}, {"n", row.n}};
    j["pearson"] = row.pearson ? nlohmann::json(*row.pearson) : nlohmann::json(nullptr);
    j["pearson_abs"] = row.pearson ? nlohmann::json(*row.pearsonAbs()) : nlohmann::json(nullptr);
    if (!row.note.empty()) j["note"] = row.note;
    rows.push_back(j);
  }
  return {{"rows", rows}, {"metadata", r.metadata}};
}

}  // namespace mtme
