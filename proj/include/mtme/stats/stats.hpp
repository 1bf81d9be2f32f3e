#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "mtme/error.hpp"

namespace mtme {

// Sample Pearson correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  if (xs.size() < 2) throw InvalidArgument("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) throw DegenerateInput("pearson: zero variance input");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::max(-1.0, std::min(1.0, r));
}

struct ScoreWithAnnotator {
  std::string annotator;
  double raw = 0.0;
};

struct ZScoreResult {
  std::vector<double> z;  // aligned with the input
  int degenerateAnnotators = 0;
};

// Per-annotator standardization with the sample (n-1) deviation. Annotators
// with a single score or no spread map to 0 and are counted.
inline ZScoreResult zScores(std::span<const ScoreWithAnnotator> scores) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < scores.size(); ++i) groups[scores[i].annotator].push_back(i);
  ZScoreResult out;
  out.z.assign(scores.size(), 0.0);
  for (const auto& [name, idx] : groups) {
    const double n = static_cast<double>(idx.size());
    double mean = 0;
    for (auto i : idx) mean += scores[i].raw;
    mean /= n;
    double ss = 0;
    for (auto i : idx) ss += (scores[i].raw - mean) * (scores[i].raw - mean);
    const double sd = idx.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    if (!(sd > 0)) {
      ++out.degenerateAnnotators;
      continue;
    }
    for (auto i : idx) out.z[i] = (scores[i].raw - mean) / sd;
  }
  return out;
}

struct MeanInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double halfWidth() const { return hi - mean; }
};

// Student-t confidence interval of the mean.
inline MeanInterval meanCI(std::span<const double> values, double level = 0.95) {
  if (values.size() < 2) throw InvalidArgument("meanCI: need at least two values");
  if (!(level > 0 && level < 1)) throw InvalidArgument("meanCI: level must be in (0, 1)");
  const double n = static_cast<double>(values.size());
  double mean = 0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const boost::math::students_t dist(n - 1);
  const double t = boost::math::quantile(dist, 0.5 + level / 2);
  const double half = t * sd / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

}  // namespace mtme
