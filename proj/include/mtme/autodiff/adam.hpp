#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mtme/autodiff/tensor.hpp"
#include "mtme/error.hpp"

namespace mtme::ad {

struct AdamState {
  double learningRate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Mat> m;
  std::vector<Mat> v;
};

// One bias-corrected Adam update of params in place.
inline void adamStep(std::span<Mat* const> params, std::span<const Mat* const> grads, AdamState& s) {
  if (params.size() != grads.size()) throw InvalidArgument("adamStep: parameter/gradient count mismatch");
  if (s.m.empty()) {
    for (auto* p : params) {
      s.m.push_back(Mat::Zero(p->rows(), p->cols()));
      s.v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  if (s.m.size() != params.size()) throw InvalidArgument("adamStep: state tracks a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = *grads[i];
    if (g.rows() != params[i]->rows() || g.cols() != params[i]->cols() || s.m[i].rows() != g.rows() ||
        s.m[i].cols() != g.cols()) {
      throw InvalidArgument("adamStep: shape mismatch for parameter " + std::to_string(i));
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = *grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g.cwiseProduct(g);
    const auto mhat = s.m[i].array() / c1;
    const auto vhat = s.v[i].array() / c2;
    params[i]->array() -= s.learningRate * mhat / (vhat.sqrt() + s.eps);
  }
}

// Adam over graph parameters, reading their accumulated gradients.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double learningRate) : params_(std::move(params)) {
    state_.learningRate = learningRate;
  }

  void zeroGrad() {
    for (auto& p : params_) p.zeroGrad();
  }

  void step() {
    std::vector<Mat*> values;
    std::vector<const Mat*> grads;
    for (auto& p : params_) {
      values.push_back(&p.mutableValue());
      grads.push_back(&p.mutableGrad());
    }
    adamStep(values, grads, state_);
  }

  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace mtme::ad
