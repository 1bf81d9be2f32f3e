#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"

namespace mtme {

// 1 when the metric lies within 10% of the estimate (closed interval, with a
// 1e-12 slack so that decimal boundaries like 0.5 vs 0.55 count as inside).
inline int confidenceLabel(double meValue, double bleuValue) {
  return std::fabs(meValue - bleuValue) <= 0.10 * std::fabs(meValue) + 1e-12 ? 1 : 0;
}

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
};

inline double logRegProbability(const LogRegModel& m, const std::vector<double>& x) {
  if (x.size() != m.weights.size()) {
    throw InvalidArgument("logreg: expected " + std::to_string(m.weights.size()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  double z = m.bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += m.weights[i] * x[i];
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Full-batch gradient descent on the mean logistic loss from zero weights.
inline LogRegModel logRegFit(const std::vector<std::vector<double>>& xs, const std::vector<int>& labels,
                             double lr = 0.1, int epochs = 1000) {
  if (xs.size() != labels.size()) throw InvalidArgument("logRegFit: inputs and labels differ in count");
  if (xs.size() < 2) throw InvalidArgument("logRegFit: need at least two examples");
  int positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("logRegFit: labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0 || positives == static_cast<int>(labels.size())) {
    throw InvalidArgument("logRegFit: training labels contain a single class");
  }
  const std::size_t d = xs.front().size();
  for (const auto& x : xs) {
    if (x.size() != d) throw InvalidArgument("logRegFit: ragged inputs");
  }
  LogRegModel m{std::vector<double>(d, 0.0), 0.0};
  const double n = static_cast<double>(xs.size());
  std::vector<double> gw(d);
  for (int e = 0; e < epochs; ++e) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double err = logRegProbability(m, xs[i]) - labels[i];
      for (std::size_t k = 0; k < d; ++k) gw[k] += err * xs[i][k];
      gb += err;
    }
    for (std::size_t k = 0; k < d; ++k) m.weights[k] -= lr * gw[k] / n;
    m.bias -= lr * gb / n;
  }
  return m;
}

struct ClassifierAccuracy {
  double accuracy = 0.0;
  double majorityBaseline = 0.0;  // share of the most common label
};

inline ClassifierAccuracy logRegAccuracy(const LogRegModel& m, const std::vector<std::vector<double>>& xs,
                                         const std::vector<int>& labels) {
  if (xs.empty() || xs.size() != labels.size()) throw InvalidArgument("logRegAccuracy: empty or misaligned data");
  std::size_t correct = 0, positives = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int pred = logRegProbability(m, xs[i]) >= 0.5 ? 1 : 0;
    correct += pred == labels[i];
    positives += labels[i] == 1;
  }
  const double n = static_cast<double>(xs.size());
  const double pos = static_cast<double>(positives) / n;
  return {static_cast<double>(correct) / n, std::max(pos, 1.0 - pos)};
}

inline nlohmann::json toJson(const LogRegModel& m) { return {{"weights", m.weights}, {"bias", m.bias}}; }

inline LogRegModel logRegFromJson(const nlohmann::json& j) {
  try {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("logreg: ") + e.what());
  }
}

}  // namespace mtme
