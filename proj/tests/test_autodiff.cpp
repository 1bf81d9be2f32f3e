#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mtme/autodiff/adam.hpp"
#include "mtme/autodiff/lstm.hpp"
#include "mtme/autodiff/tensor.hpp"
#include "oracles/finite_diff.hpp"

using namespace mtme::ad;

namespace {

Mat randomMat(long r, long c, mtme::Rng& rng, double range = 1.0) {
  Mat m(r, c);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-range, range);
  return m;
}

// Random fixed weights make every cell of an op's output influence the loss.
Tensor weightedSum(const Tensor& x, const Mat& w) { return sum(mul(x, Tensor::constant(w))); }

}  // namespace

TEST(Ops, ForwardValues) {
  EXPECT_EQ(sigmoid(Tensor::scalar(0)).item(), 0.5);
  mtme::Rng rng(1);
  Tensor x = Tensor::constant(randomMat(3, 4, rng));
  Tensor d = dropout(x, 0.75, false, rng);
  EXPECT_EQ(d.value(), x.value());
  Mat p(1, 2), t(1, 2);
  p << 1, 0;
  t << 0, 0;
  EXPECT_EQ(mse(Tensor::constant(p), Tensor::constant(t)).item(), 0.5);
  EXPECT_THROW(matmul(Tensor::constant(Mat::Zero(2, 3)), Tensor::constant(Mat::Zero(2, 3))), mtme::InvalidArgument);
  EXPECT_THROW(add(Tensor::constant(Mat::Zero(2, 3)), Tensor::constant(Mat::Zero(3, 2))), mtme::InvalidArgument);
}

TEST(Backward, HandChainRules) {
  Tensor x = Tensor::parameter(Mat::Zero(1, 1));
  backward(sigmoid(x));
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 0.25);

  Tensor w = Tensor::parameter(Mat::Constant(1, 1, 1.0));
  Tensor in = Tensor::constant(Mat::Constant(1, 1, 2.0));
  backward(mse(matmul(w, in), Tensor::scalar(0.0)));
  EXPECT_DOUBLE_EQ(w.grad()(0, 0), 8.0);
}

TEST(Backward, RejectsNonScalarAndSecondCall) {
  Tensor a = Tensor::parameter(Mat::Ones(2, 2));
  EXPECT_THROW(backward(scale(a, 2.0)), mtme::InvalidArgument);
  Tensor loss = sum(mul(a, a));
  backward(loss);
  EXPECT_THROW(backward(loss), mtme::InvalidArgument);
}

TEST(Backward, AccumulatesOverPaths) {
  Tensor a = Tensor::parameter(Mat::Constant(1, 1, 3.0));
  backward(sum(add(mul(a, a), a)));  // d/da (a^2 + a) = 2a + 1
  EXPECT_DOUBLE_EQ(a.grad()(0, 0), 7.0);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor a = Tensor::parameter(Mat::Ones(2, 2));
  NoGradGuard g;
  Tensor y = sum(mul(a, a));
  EXPECT_FALSE(y.requiresGrad());
  EXPECT_TRUE(y.node()->parents.empty());
}

TEST(GradCheck, EveryOperator) {
  mtme::Rng rng(42);
  Tensor a = Tensor::parameter(randomMat(3, 4, rng));
  Tensor b = Tensor::parameter(randomMat(3, 4, rng));
  Tensor m = Tensor::parameter(randomMat(4, 2, rng));
  Tensor row = Tensor::parameter(randomMat(1, 4, rng));
  Tensor table = Tensor::parameter(randomMat(5, 3, rng));
  const Mat w34 = randomMat(3, 4, rng), w32 = randomMat(3, 2, rng), w38 = randomMat(3, 8, rng);
  const Mat w33 = randomMat(3, 3, rng), w42 = randomMat(4, 3, rng);
  const Mat target = randomMat(3, 4, rng);
  Mat mask = Mat::Ones(3, 4);
  mask(0, 1) = mask(2, 3) = 0;
  // Keep relu inputs away from the kink.
  for (long i = 0; i < a.value().size(); ++i) {
    double& v = a.mutableValue().data()[i];
    if (std::fabs(v) < 0.05) v = 0.3;
  }

  const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
      {"matmul", [&] { return weightedSum(matmul(a, m), w32); }},
      {"add", [&] { return weightedSum(add(a, b), w34); }},
      {"addRow", [&] { return weightedSum(addRow(a, row), w34); }},
      {"sub", [&] { return weightedSum(sub(a, b), w34); }},
      {"mul", [&] { return weightedSum(mul(a, b), w34); }},
      {"scale", [&] { return weightedSum(scale(a, -1.7), w34); }},
      {"sigmoid", [&] { return weightedSum(sigmoid(a), w34); }},
      {"tanh", [&] { return weightedSum(tanh(a), w34); }},
      {"relu", [&] { return weightedSum(relu(a), w34); }},
      {"concatCols", [&] { return weightedSum(concatCols({a, b}), w38); }},
      {"sliceCols", [&] { return weightedSum(sliceCols(a, 1, 2), w32); }},
      {"select", [&] { return weightedSum(select({1, 0, 1}, a, b), w34); }},
      {"embedding", [&] { return weightedSum(embedding(table, {4, 0, 4, 2}), w42); }},
      {"mean", [&] { return mean(mul(a, b)); }},
      {"mse", [&] { return mse(a, Tensor::constant(target)); }},
      {"mseBoth", [&] { return mse(a, b); }},
      {"maskedMse", [&] { return maskedMse(a, b, mask); }},
      {"dropoutTrain", [&] {
         mtme::Rng fixed(9);
         return weightedSum(dropout(a, 0.4, true, fixed), w34);
       }},
      {"composite", [&] { return weightedSum(sigmoid(matmul(tanh(a), m)), w32); }},
      {"embedTable", [&] { return weightedSum(matmul(embedding(table, {1, 1, 3}), Tensor::constant(w33)), w33); }},
  };
  for (const auto& [name, fn] : cases) {
    auto r = oracle::checkGradients(fn, {{"a", a}, {"b", b}, {"m", m}, {"row", row}, {"table", table}});
    EXPECT_LT(r.maxRelError, 1e-4) << name << ": " << r.worst;
  }
}

TEST(Dropout, ExpectationMatchesEval) {
  mtme::Rng rng(3);
  Tensor x = Tensor::constant(Mat::Constant(1, 200, 2.0));
  double total = 0;
  const int samples = 500;
  for (int s = 0; s < samples; ++s) total += dropout(x, 0.75, true, rng).value().mean();
  // Each sample mean has sd 2*sqrt(3)/sqrt(200); the average of 500 is within 0.05 at many sigmas.
  EXPECT_NEAR(total / samples, 2.0, 0.05);
}

TEST(Adam, FirstStepAndSign) {
  Mat w = Mat::Constant(1, 1, 1.0);
  AdamState s;
  s.learningRate = 0.001;
  Mat g = 2.0 * w;
  Mat* ps[] = {&w};
  const Mat* gs[] = {&g};
  adamStep(ps, gs, s);
  EXPECT_NEAR(w(0, 0), 0.999, 1e-9);
  EXPECT_EQ(s.step, 1);

  Mat z = Mat::Constant(2, 2, 0.5);
  Mat zg = Mat::Zero(2, 2);
  AdamState s2;
  Mat* zp[] = {&z};
  const Mat* zgp[] = {&zg};
  adamStep(zp, zgp, s2);
  EXPECT_EQ(z, Mat::Constant(2, 2, 0.5));
  EXPECT_EQ(s2.step, 1);

  Mat q(1, 3);
  q << 0.0, 0.0, 0.0;
  Mat qg(1, 3);
  qg << 5.0, -0.01, 1e3;
  AdamState s3;
  s3.learningRate = 0.01;
  Mat* qp[] = {&q};
  const Mat* qgp[] = {&qg};
  Mat before = q;
  for (int k = 0; k < 2; ++k) {
    adamStep(qp, qgp, s3);
    for (long i = 0; i < 3; ++i) {
      EXPECT_LT(q(0, i) * (qg(0, i) > 0 ? 1 : -1), before(0, i) * (qg(0, i) > 0 ? 1 : -1));
      EXPECT_NEAR(std::fabs(q(0, i) - before(0, i)), 0.01, 1e-5);
    }
    before = q;
  }

  Mat bad = Mat::Zero(2, 1);
  const Mat* badp[] = {&bad};
  EXPECT_THROW(adamStep(qp, badp, s3), mtme::InvalidArgument);
}

TEST(Lstm, ZeroWeightsGiveZeroState) {
  LstmWeights w{Tensor::parameter(Mat::Zero(3, 8)), Tensor::parameter(Mat::Zero(2, 8)),
                Tensor::parameter(Mat::Zero(1, 8))};
  mtme::Rng rng(1);
  Tensor x = Tensor::constant(randomMat(4, 3, rng));
  LstmState st{Tensor::constant(Mat::Zero(4, 2)), Tensor::constant(Mat::Zero(4, 2))};
  for (int t = 0; t < 3; ++t) st = lstmCell(x, st, w);
  EXPECT_EQ(st.h.value(), Mat::Zero(4, 2));
}

TEST(Lstm, CellGradientsThreeSteps) {
  mtme::Rng rng(5);
  auto w = makeLstmWeights(3, 4, rng);
  w.Wx.mutableValue() = randomMat(3, 16, rng, 0.5);
  w.Wh.mutableValue() = randomMat(4, 16, rng, 0.5);
  Tensor x0 = Tensor::parameter(randomMat(2, 3, rng));
  const Mat x1 = randomMat(2, 3, rng), x2 = randomMat(2, 3, rng), wo = randomMat(2, 4, rng);
  auto loss = [&] {
    LstmState st{Tensor::constant(Mat::Zero(2, 4)), Tensor::constant(Mat::Zero(2, 4))};
    st = lstmCell(x0, st, w);
    st = lstmCell(Tensor::constant(x1), st, w);
    st = lstmCell(Tensor::constant(x2), st, w);
    return weightedSum(add(st.h, st.c), wo);
  };
  auto r = oracle::checkGradients(loss, {{"Wx", w.Wx}, {"Wh", w.Wh}, {"b", w.b}, {"x0", x0}});
  EXPECT_LT(r.maxRelError, 1e-4) << r.worst;
}

namespace {

struct ToyEncoder {
  Tensor table;
  std::vector<BiLstmLayer> layers;

  explicit ToyEncoder(mtme::Rng& rng) {
    table = Tensor::parameter(randomMat(7, 3, rng, 0.5));
    layers.push_back({makeLstmWeights(3, 2, rng), makeLstmWeights(3, 2, rng)});
    layers.push_back({makeLstmWeights(4, 2, rng), makeLstmWeights(4, 2, rng)});
  }

  // ids is (B, T) with 0 as padding.
  Tensor encode(const std::vector<std::vector<int>>& ids) {
    const std::size_t T = ids.front().size();
    std::vector<Tensor> steps;
    std::vector<std::vector<char>> mask(T);
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<int> col;
      for (const auto& row : ids) {
        col.push_back(row[t]);
        mask[t].push_back(row[t] != 0);
      }
      steps.push_back(embedding(table, col));
    }
    mtme::Rng rng(0);
    auto out = biLstm(steps, mask, layers, 0.2, false, rng);
    return concatCols(out.finalStates);
  }
};

}  // namespace

TEST(BiLstm, PaddingDoesNotChangeFinalStates) {
  mtme::Rng rng(11);
  ToyEncoder enc(rng);
  NoGradGuard g;
  const Mat base = enc.encode({{3, 4, 5}, {6, 2, 0}}).value();
  const Mat padded = enc.encode({{3, 4, 5, 0, 0}, {6, 2, 0, 0, 0}}).value();
  ASSERT_EQ(base.cols(), 8);
  EXPECT_LT((base - padded).cwiseAbs().maxCoeff(), 1e-12);
  const Mat alone = enc.encode({{6, 2}}).value();
  EXPECT_LT((alone.row(0) - base.row(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BiLstm, AllPaddingThrows) {
  mtme::Rng rng(11);
  ToyEncoder enc(rng);
  EXPECT_THROW(enc.encode({{3, 4}, {0, 0}}), mtme::InvalidArgument);
}

TEST(BiLstm, GradientsThroughStackWithPadding) {
  mtme::Rng rng(12);
  ToyEncoder enc(rng);
  const Mat w = randomMat(2, 8, rng);
  auto loss = [&] { return weightedSum(enc.encode({{3, 4, 5, 1}, {6, 2, 0, 0}}), w); };
  std::vector<std::pair<std::string, Tensor>> params{{"table", enc.table}};
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    for (auto* dir : {&enc.layers[l].fwd, &enc.layers[l].bwd}) {
      params.push_back({"Wx", dir->Wx});
      params.push_back({"Wh", dir->Wh});
      params.push_back({"b", dir->b});
    }
  }
  auto r = oracle::checkGradients(loss, params);
  EXPECT_LT(r.maxRelError, 1e-4) << r.worst;
}
