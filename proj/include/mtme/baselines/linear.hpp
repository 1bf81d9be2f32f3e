#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mtme/baselines/tfidf.hpp"
#include "mtme/data/dataset_ops.hpp"
#include "mtme/error.hpp"
#include "mtme/stats/stats.hpp"

namespace mtme {

struct LinRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  double ridge = 0.0;
};

// Solves (A'A + ridge I) w = A'y where A is X with a trailing column of ones.
// When there are more columns than rows the equivalent dual system
// w = A'(AA' + ridge I)^-1 y is solved instead.
inline LinRegModel olsFit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge = 1e-6) {
  if (X.rows() < 1) throw InvalidArgument("olsFit: no rows");
  if (X.rows() != y.size()) {
    throw InvalidArgument("olsFit: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " targets");
  }
  if (!(ridge > 0)) throw InvalidArgument("olsFit: ridge must be positive");
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A << X, Eigen::VectorXd::Ones(X.rows());
  Eigen::VectorXd w;
  if (A.cols() <= A.rows()) {
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += ridge;
    w = G.llt().solve(A.transpose() * y);
  } else {
    Eigen::MatrixXd K = A * A.transpose();
    K.diagonal().array() += ridge;
    w = A.transpose() * K.llt().solve(y);
  }
  LinRegModel m;
  m.weights.assign(w.data(), w.data() + X.cols());
  m.bias = w(X.cols());
  m.ridge = ridge;
  return m;
}

inline double linPredict(const LinRegModel& m, std::span<const double> x) {
  if (x.size() != m.weights.size()) {
    throw InvalidArgument("linPredict: expected " + std::to_string(m.weights.size()) + " features, got " +
                          std::to_string(x.size()));
  }
  double v = m.bias;
  for (std::size_t i = 0; i < x.size(); ++i) v += m.weights[i] * x[i];
  return v;
}

inline double linPredict(const LinRegModel& m, const SparseVector& x) {
  double v = m.bias;
  for (const auto& [id, value] : x) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.weights.size()) throw InvalidArgument("linPredict: id out of range");
    v += m.weights[static_cast<std::size_t>(id)] * value;
  }
  return v;
}

inline nlohmann::json toJson(const LinRegModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias}, {"ridge", m.ridge}};
}

inline LinRegModel linRegFromJson(const nlohmann::json& j) {
  try {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(), j.at("ridge").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("linreg: ") + e.what());
  }
}

inline double pairTarget(const TrainingPair& p, const std::string& target) {
  if (target == metric_id::kHuman) {
    if (!p.humanZ) throw InvalidArgument("pair " + p.segmentId + "#" + std::to_string(p.hypIndex) + " has no human score");
    return *p.humanZ;
  }
  auto it = p.scores.find(target);
  if (it == p.scores.end()) {
    throw InvalidArgument("pair " + p.segmentId + "#" + std::to_string(p.hypIndex) + " has no '" + target + "' score");
  }
  return it->second;
}

inline Eigen::VectorXd pairTargets(const std::vector<TrainingPair>& pairs, const std::string& target) {
  Eigen::VectorXd y(static_cast<long>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) y(static_cast<long>(i)) = pairTarget(pairs[i], target);
  return y;
}

// Pearson of predictions against gold; empty when the predictions are constant.
inline std::optional<double> predictionPearson(const std::vector<double>& pred, const Eigen::VectorXd& gold) {
  std::vector<double> g(gold.data(), gold.data() + gold.size());
  try {
    return pearson(pred, g);
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

inline void requireVariance(const Eigen::VectorXd& y, const std::string& what) {
  if (y.size() < 2 || (y.array() == y(0)).all()) throw DegenerateInput(what + " targets have zero variance");
}

// Lin.Reg. on the glass-box feature vector carried by each pair.
inline LinRegModel featureBaselineFit(const std::vector<TrainingPair>& train, const std::string& target) {
  if (train.empty()) throw InvalidArgument("featureBaselineFit: empty training set");
  const long d = static_cast<long>(train.front().features.size());
  Eigen::MatrixXd X(static_cast<long>(train.size()), d);
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (static_cast<long>(train[i].features.size()) != d) throw InvalidArgument("featureBaselineFit: ragged features");
    for (long k = 0; k < d; ++k) X(static_cast<long>(i), k) = train[i].features[static_cast<std::size_t>(k)];
  }
  return olsFit(X, pairTargets(train, target));
}

inline std::vector<long> tfidfGrid() {
  std::vector<long> g;
  for (int e = 4; e <= 14; ++e) g.push_back(1L << e);
  return g;
}

struct TfidfGridPoint {
  long maxFeatures = 0;
  std::size_t retained = 0;
  std::optional<double> devPearson;
};

struct TfidfSearchResult {
  TfidfModel tfidf;
  LinRegModel linreg;
  std::vector<TfidfGridPoint> grid;
};

inline std::vector<TfidfDocument> tfidfDocuments(const std::vector<TrainingPair>& pairs) {
  std::vector<TfidfDocument> docs;
  for (const auto& p : pairs) docs.push_back({p.src, p.hyp});
  return docs;
}

inline std::pair<TfidfModel, LinRegModel> tfidfBaselineFit(const std::vector<TfidfDocument>& docs,
                                                           const Eigen::VectorXd& y, long maxFeatures) {
  auto tf = tfidfFit(docs, maxFeatures);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<long>(docs.size()), static_cast<long>(tf.dim()));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& [id, v] : tfidfTransform(tf, docs[i])) X(static_cast<long>(i), id) = v;
  }
  auto lr = olsFit(X, y);
  return {std::move(tf), std::move(lr)};
}

// Fits one TF-IDF regression per grid size and keeps the one with the largest
// absolute dev Pearson (the smaller size on ties).
inline TfidfSearchResult tfidfMaxFeatureSearch(const std::vector<TrainingPair>& train,
                                               const std::vector<TrainingPair>& dev, const std::string& target) {
  if (train.empty() || dev.empty()) throw InvalidArgument("tfidfMaxFeatureSearch: empty split");
  const auto yTrain = pairTargets(train, target);
  const auto yDev = pairTargets(dev, target);
  requireVariance(yDev, "dev");
  const auto docs = tfidfDocuments(train);
  const auto devDocs = tfidfDocuments(dev);
  TfidfSearchResult best;
  double bestAbs = -1.0;
  for (long size : tfidfGrid()) {
    auto [tf, lr] = tfidfBaselineFit(docs, yTrain, size);
    std::vector<double> pred;
    for (const auto& d : devDocs) pred.push_back(linPredict(lr, tfidfTransform(tf, d)));
    const auto r = predictionPearson(pred, yDev);
    best.grid.push_back({size, tf.dim(), r});
    const double a = r ? std::fabs(*r) : 0.0;
    if (a > bestAbs) {
      bestAbs = a;
      best.tfidf = std::move(tf);
      best.linreg = std::move(lr);
    }
  }
  return best;
}

}  // namespace mtme
