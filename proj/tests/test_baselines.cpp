#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mtme/baselines/confidence.hpp"
#include "mtme/baselines/linear.hpp"
#include "mtme/baselines/tfidf.hpp"
#include "mtme/data/synthetic.hpp"
#include "mtme/util/rng.hpp"

using namespace mtme;

namespace {

// Augmented ridge normal equations solved by QR.
Eigen::VectorXd ridgeOracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A << X, Eigen::VectorXd::Ones(X.rows());
  Eigen::MatrixXd G = A.transpose() * A + ridge * Eigen::MatrixXd::Identity(A.cols(), A.cols());
  return G.colPivHouseholderQr().solve(A.transpose() * y);
}

double norm(const SparseVector& v) {
  double s = 0;
  for (const auto& [id, x] : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(Tfidf, SingleDocumentIdfIsOne) {
  auto m = tfidfFit({{"a b", "c a"}}, 100);
  EXPECT_EQ(m.dim(), 3u);
  for (double idf : m.idf) EXPECT_DOUBLE_EQ(idf, 1.0);
}

TEST(Tfidf, RetentionOrder) {
  std::vector<TfidfDocument> docs{{"x y", "z"}, {"y z", ""}, {"z w", "y"}, {"q", "q q"}};
  auto one = tfidfFit(docs, 1);
  ASSERT_EQ(one.dim(), 1u);
  // y and z both appear in three documents; y wins the lexicographic tie.
  EXPECT_EQ(one.vocabulary.begin()->first, "y");
  auto two = tfidfFit(docs, 2);
  EXPECT_EQ(two.vocabulary.at("y"), 0);
  EXPECT_EQ(two.vocabulary.at("z"), 1);
  EXPECT_DOUBLE_EQ(two.idf[0], std::log(5.0 / 4.0) + 1.0);
  auto all = tfidfFit(docs, 100);
  EXPECT_EQ(all.dim(), 5u);
  EXPECT_DOUBLE_EQ(all.idf[all.vocabulary.at("q")], std::log(5.0 / 2.0) + 1.0);
}

TEST(Tfidf, TransformExamples) {
  std::vector<TfidfDocument> docs{{"a b", "a"}, {"b c", ""}};
  auto m = tfidfFit(docs, 10);
  EXPECT_TRUE(tfidfTransform(m, {"zzz", "yyy"}).empty());
  auto v = tfidfTransform(m, {"a a", "b"});
  ASSERT_EQ(v.size(), 2u);
  const double ia = m.idf[m.vocabulary.at("a")], ib = m.idf[m.vocabulary.at("b")];
  const double n = std::sqrt(4 * ia * ia + ib * ib);
  for (auto [id, x] : v) EXPECT_DOUBLE_EQ(x, id == m.vocabulary.at("a") ? 2 * ia / n : ib / n);
  EXPECT_THROW(tfidfFit({}, 10), InvalidArgument);
  EXPECT_THROW(tfidfFit(docs, 0), InvalidArgument);
}

TEST(Tfidf, NormProperty) {
  SyntheticOptions o;
  o.segments = 40;
  auto d = generateSynthetic(o);
  std::vector<TfidfDocument> docs;
  for (auto& s : d) docs.push_back({s.src, s.hyps[0].text});
  for (long size : {1L, 16L, 1024L}) {
    auto m = tfidfFit(docs, size);
    EXPECT_LE(static_cast<long>(m.dim()), size);
    for (auto& s : d) {
      for (auto& h : s.hyps) {
        const double n = norm(tfidfTransform(m, {s.src, h.text}));
        EXPECT_TRUE(n == 0.0 || std::fabs(n - 1.0) < 1e-12) << n;
      }
    }
  }
  auto m = tfidfFit(docs, 64);
  auto back = tfidfFromJson(toJson(m));
  EXPECT_EQ(back.vocabulary, m.vocabulary);
  EXPECT_EQ(back.idf, m.idf);
}

TEST(Ols, ExactLine) {
  Eigen::MatrixXd X(100, 1);
  Eigen::VectorXd y(100);
  for (int i = 0; i < 100; ++i) {
    X(i, 0) = i - 49.5;
    y(i) = 2 * X(i, 0);
  }
  auto m = olsFit(X, y);
  EXPECT_NEAR(m.weights[0], 2.0, 1e-9);
  EXPECT_NEAR(m.bias, 0.0, 1e-9);
}

TEST(Ols, PlantedModelRecovery) {
  Rng rng(3);
  const std::vector<double> w{0.5, -1.25, 3.0, 0.0, 2.0};
  Eigen::MatrixXd X(200, 5);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    y(i) = 0.7;
    for (int k = 0; k < 5; ++k) {
      X(i, k) = rng.normal();
      y(i) += w[static_cast<std::size_t>(k)] * X(i, k);
    }
  }
  auto m = olsFit(X, y);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(m.weights[static_cast<std::size_t>(k)], w[static_cast<std::size_t>(k)], 1e-6);
  EXPECT_NEAR(m.bias, 0.7, 1e-6);
}

// Ridge shrinkage is about ridge * |w| / n, so the 1e-8 bound needs a design
// with enough rows.
TEST(Ols, ExactlyLinearReproducesTargets) {
  Rng rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 5000, d = 4;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    std::vector<double> w(d);
    for (auto& v : w) v = rng.uniform(-2, 2);
    for (int i = 0; i < n; ++i) {
      y(i) = -0.3;
      for (int k = 0; k < d; ++k) {
        X(i, k) = rng.normal();
        y(i) += w[static_cast<std::size_t>(k)] * X(i, k);
      }
    }
    auto m = olsFit(X, y);
    double worst = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd r = X.row(i);
      worst = std::max(worst, std::fabs(linPredict(m, std::vector<double>(r.data(), r.data() + d)) - y(i)));
    }
    EXPECT_LT(worst, 1e-8);
  }
}

TEST(Ols, MatchesOracleAndOrthogonality) {
  Rng rng(9);
  for (auto [n, d] : std::vector<std::pair<int, int>>{{30, 4}, {8, 20}, {12, 12}, {3, 40}}) {
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) X(i, k) = rng.normal();
      y(i) = rng.normal();
    }
    const double ridge = 1e-3;
    auto m = olsFit(X, y, ridge);
    const auto oracle = ridgeOracle(X, y, ridge);
    for (int k = 0; k < d; ++k) EXPECT_NEAR(m.weights[static_cast<std::size_t>(k)], oracle(k), 1e-7) << n << "x" << d;
    EXPECT_NEAR(m.bias, oracle(d), 1e-7);
    Eigen::VectorXd w(d + 1);
    for (int k = 0; k < d; ++k) w(k) = m.weights[static_cast<std::size_t>(k)];
    w(d) = m.bias;
    Eigen::MatrixXd A(n, d + 1);
    A << X, Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd grad = A.transpose() * (y - A * w) - ridge * w;
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Ols, RankDeficientAndErrors) {
  Eigen::MatrixXd X(6, 3);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = i;
    X(i, 1) = 2 * i;
    X(i, 2) = 1.0;
    y(i) = i + 1;
  }
  auto m = olsFit(X, y);
  for (double w : m.weights) EXPECT_TRUE(std::isfinite(w));
  EXPECT_TRUE(std::isfinite(m.bias));
  EXPECT_THROW(olsFit(X, Eigen::VectorXd::Zero(5)), InvalidArgument);
  EXPECT_THROW(olsFit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), InvalidArgument);
  std::vector<double> wrong{1.0};
  EXPECT_THROW(linPredict(m, wrong), InvalidArgument);
  auto back = linRegFromJson(toJson(m));
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
}

TEST(TfidfSearch, GridAndErrors) {
  EXPECT_EQ(tfidfGrid(), (std::vector<long>{16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384}));
  SyntheticOptions o;
  o.segments = 120;
  o.hypsPerSegment = 2;
  auto d = generateSynthetic(o);
  computeMetricColumns(d, {"sentbleu"});
  auto sp = splitDataset(d, 30, 1);
  auto tr = expandHypotheses(sp.train, 2), dv = expandHypotheses(sp.dev, 1);
  auto r = tfidfMaxFeatureSearch(tr, dv, "sentbleu");
  ASSERT_EQ(r.grid.size(), 11u);
  double best = -1;
  for (const auto& g : r.grid) {
    EXPECT_TRUE(g.devPearson.has_value());
    EXPECT_LE(static_cast<long>(g.retained), g.maxFeatures);
    best = std::max(best, std::fabs(g.devPearson.value_or(0)));
  }
  EXPECT_LE(r.tfidf.dim(), static_cast<std::size_t>(r.tfidf.maxFeatures));
  std::vector<double> pred;
  auto y = pairTargets(dv, "sentbleu");
  for (const auto& p : dv) pred.push_back(linPredict(r.linreg, tfidfTransform(r.tfidf, {p.src, p.hyp})));
  EXPECT_NEAR(std::fabs(*predictionPearson(pred, y)), best, 1e-12);

  for (auto& p : dv) p.scores["sentbleu"] = 0.5;
  EXPECT_THROW(tfidfMaxFeatureSearch(tr, dv, "sentbleu"), DegenerateInput);
  EXPECT_THROW(tfidfMaxFeatureSearch(tr, dv, "chrf"), InvalidArgument);
}

TEST(FeatureBaseline, FitsSyntheticTarget) {
  SyntheticOptions o;
  o.segments = 300;
  auto d = generateSynthetic(o);
  auto sp = splitDataset(d, 60, 2);
  auto tr = expandHypotheses(sp.train, 5), dv = expandHypotheses(sp.dev, 1);
  auto m = featureBaselineFit(tr, kSyntheticMetric);
  EXPECT_EQ(m.weights.size(), 9u);
  std::vector<double> pred;
  for (const auto& p : dv) pred.push_back(linPredict(m, std::span<const double>(p.features)));
  EXPECT_GT(*predictionPearson(pred, pairTargets(dv, kSyntheticMetric)), 0.5);
}

TEST(Confidence, LabelExamples) {
  EXPECT_EQ(confidenceLabel(0.5, 0.52), 1);
  EXPECT_EQ(confidenceLabel(0.5, 0.60), 0);
  EXPECT_EQ(confidenceLabel(0.5, 0.55), 1);
  EXPECT_EQ(confidenceLabel(0.5, 0.45), 1);
  EXPECT_EQ(confidenceLabel(-0.5, -0.55), 1);
  EXPECT_EQ(confidenceLabel(0.0, 0.0), 1);
  EXPECT_EQ(confidenceLabel(0.0, 1e-9), 0);
}

TEST(Confidence, LabelReflectionSymmetry) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double me = rng.uniform(-2, 2);
    const double delta = rng.uniform(0, 0.3);
    EXPECT_EQ(confidenceLabel(me, me + delta), confidenceLabel(me, me - delta));
  }
}

TEST(LogReg, SeparableSet) {
  Rng rng(4);
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  while (xs.size() < 200) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    if (std::fabs(a + b) < 0.2) continue;
    xs.push_back({a, b});
    ys.push_back(a + b > 0 ? 1 : 0);
  }
  auto m = logRegFit(xs, ys);
  auto acc = logRegAccuracy(m, xs, ys);
  EXPECT_GE(acc.accuracy, 0.95);
  auto back = logRegFromJson(toJson(m));
  EXPECT_EQ(back.weights, m.weights);
}

TEST(LogReg, ConstantModelAndErrors) {
  std::vector<std::vector<double>> xs{{1}, {2}, {3}, {4}, {5}};
  std::vector<int> ys{0, 0, 1, 0, 1};
  LogRegModel never{{0.0}, -1.0};
  auto acc = logRegAccuracy(never, xs, ys);
  EXPECT_DOUBLE_EQ(acc.accuracy, acc.majorityBaseline);
  EXPECT_DOUBLE_EQ(acc.majorityBaseline, 0.6);
  EXPECT_THROW(logRegFit(xs, {1, 1, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(logRegFit({{1}}, {1}), InvalidArgument);
  EXPECT_THROW(logRegFit(xs, {0, 1}), InvalidArgument);
}
