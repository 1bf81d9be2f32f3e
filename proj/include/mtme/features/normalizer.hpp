#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"

namespace mtme {

// Per-dimension standardization with the sample deviation. Constant
// dimensions keep std = 1 and therefore map to 0.
struct FeatureNormalizer {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dim() const { return mean.size(); }

  static FeatureNormalizer fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvalidArgument("FeatureNormalizer: no rows to fit");
    const std::size_t d = rows.front().size();
    FeatureNormalizer n;
    n.mean.assign(d, 0.0);
    n.std.assign(d, 1.0);
    for (const auto& r : rows) {
      if (r.size() != d) throw InvalidArgument("FeatureNormalizer: ragged rows");
      for (std::size_t k = 0; k < d; ++k) n.mean[k] += r[k];
    }
    const double count = static_cast<double>(rows.size());
    for (auto& m : n.mean) m /= count;
    if (rows.size() < 2) return n;
    for (std::size_t k = 0; k < d; ++k) {
      double ss = 0;
      for (const auto& r : rows) ss += (r[k] - n.mean[k]) * (r[k] - n.mean[k]);
      const double sd = std::sqrt(ss / (count - 1));
      if (sd > 1e-12 * std::max(1.0, std::fabs(n.mean[k]))) n.std[k] = sd;
    }
    return n;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (x.size() != dim()) {
      throw InvalidArgument("FeatureNormalizer: expected " + std::to_string(dim()) + " features, got " +
                            std::to_string(x.size()));
    }
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean[k]) / std[k];
    return out;
  }
};

inline nlohmann::json toJson(const FeatureNormalizer& n) { return {{"mean", n.mean}, {"std", n.std}}; }

inline FeatureNormalizer featureNormalizerFromJson(const nlohmann::json& j) {
  FeatureNormalizer n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.std = j.at("std").get<std::vector<double>>();
  if (n.mean.size() != n.std.size()) throw CorruptCheckpoint("feature_norm: mean/std length mismatch");
  for (double s : n.std) {
    if (!(s > 0) || !std::isfinite(s)) throw CorruptCheckpoint("feature_norm: non-positive std");
  }
  return n;
}

}  // namespace mtme
