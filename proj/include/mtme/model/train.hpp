#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtme/autodiff/adam.hpp"
#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/features/normalizer.hpp"
#include "mtme/model/me_model.hpp"
#include "mtme/stats/stats.hpp"
#include "mtme/util/rng.hpp"

namespace mtme {

struct TrainReport {
  double initialDevLoss = 0.0;
  double bestDevLoss = 0.0;
  long bestEpoch = 0;  // 0 when no epoch beat the starting parameters
  long epochsRun = 0;
  bool stoppedEarly = false;
};

struct EvalResult {
  double loss = 0.0;
  std::map<std::string, std::optional<double>> pearson;
  std::vector<std::vector<double>> predictions;  // target units
};

namespace detail {

inline std::vector<const Example*> pointers(const std::vector<Example>& xs) {
  std::vector<const Example*> p;
  p.reserve(xs.size());
  for (const auto& x : xs) p.push_back(&x);
  return p;
}

inline std::vector<ad::Mat> snapshot(const MeModel& m) {
  std::vector<ad::Mat> s;
  for (const auto& p : m.parameters()) s.push_back(p.value());
  return s;
}

inline void restore(MeModel& m, const std::vector<ad::Mat>& s) {
  auto ps = m.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].mutableValue() = s[i];
}

}  // namespace detail

inline std::optional<double> safePearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return std::nullopt;
  try {
    return pearson(a, b);
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

// Eval-mode predictions, masked loss and per-target Pearson over a set.
inline EvalResult evaluate(const MeModel& model, const std::vector<Example>& set, long batchSize = 32) {
  if (set.empty()) throw InvalidArgument("evaluate: empty set");
  ad::NoGradGuard guard;
  Rng unused(0);
  const auto ptrs = detail::pointers(set);
  EvalResult r;
  double sq = 0.0, cells = 0.0;
  for (std::size_t start = 0; start < ptrs.size(); start += static_cast<std::size_t>(batchSize)) {
    const std::size_t end = std::min(ptrs.size(), start + static_cast<std::size_t>(batchSize));
    std::span<const Example* const> batch(ptrs.data() + start, end - start);
    const auto fw = model.forward(batch, false, unused);
    const auto [y, m] = model.unitTargets(batch);
    sq += ((fw.unit.value() - y).cwiseProduct(m)).squaredNorm();
    cells += m.sum();
    for (auto& row : model.denormalize(fw.unit.value())) r.predictions.push_back(std::move(row));
  }
  r.loss = cells > 0 ? sq / cells : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < model.config.targets.size(); ++k) {
    std::vector<double> p, g;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!set[i].targets[k]) continue;
      p.push_back(r.predictions[i][k]);
      g.push_back(*set[i].targets[k]);
    }
    r.pearson[model.config.targets[k]] = safePearson(p, g);
  }
  return r;
}

// Fits the feature normalizer and the target transforms on a training split.
inline void fitNormalization(MeModel& model, const std::vector<Example>& train, bool features) {
  if (features && model.config.featureDim() > 0) {
    std::vector<std::vector<double>> rows;
    for (const auto& ex : train) rows.push_back(ex.features);
    model.featureNorm = FeatureNormalizer::fit(rows);
  }
  model.transforms.clear();
  for (std::size_t k = 0; k < model.config.targets.size(); ++k) {
    std::vector<double> values;
    for (const auto& ex : train) {
      if (ex.targets.size() != model.config.targets.size()) throw InvalidArgument("example target count mismatch");
      if (ex.targets[k]) values.push_back(*ex.targets[k]);
    }
    if (values.empty()) {
      throw InvalidArgument("training split has no values for target '" + model.config.targets[k] + "'");
    }
    model.transforms.push_back(TargetTransform::fit(model.config.targets[k], values));
  }
}

// Mini-batch Adam with dev-loss early stopping. The parameters with the
// lowest dev loss (including the starting ones) are kept.
inline TrainReport trainModel(MeModel& model, const std::vector<Example>& train, const std::vector<Example>& dev,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw InvalidArgument("train: empty training split");
  if (dev.empty()) throw InvalidArgument("train: empty dev split");
  for (const auto& ex : train) {
    bool any = false;
    for (const auto& t : ex.targets) any = any || t.has_value();
    if (!any) throw InvalidArgument("train: example '" + ex.segmentId + "' carries no target value");
  }
  bool devTargets = false;
  for (const auto& ex : dev) {
    for (const auto& t : ex.targets) devTargets = devTargets || t.has_value();
  }
  if (!devTargets) throw InvalidArgument("train: dev split carries no target values");

  Rng root(cfg.seed);
  Rng shuffleRng = root.fork(1);
  Rng dropoutRng = root.fork(2);
  ad::Adam opt(model.parameters(), cfg.learningRate);

  TrainReport rep;
  rep.initialDevLoss = evaluate(model, dev, cfg.batchSize).loss;
  rep.bestDevLoss = rep.initialDevLoss;
  auto best = detail::snapshot(model);
  long sinceBest = 0;
  const auto ptrs = detail::pointers(train);

  for (long epoch = 1; epoch <= cfg.maxEpochs; ++epoch) {
    const auto perm = shuffleRng.permutation(ptrs.size());
    double lossSum = 0.0, cellSum = 0.0;
    std::vector<const Example*> batch;
    for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(cfg.batchSize)) {
      batch.clear();
      for (std::size_t i = start; i < std::min(perm.size(), start + static_cast<std::size_t>(cfg.batchSize)); ++i) {
        batch.push_back(ptrs[perm[i]]);
      }
      const auto fw = model.forward(batch, true, dropoutRng);
      const auto [y, m] = model.unitTargets(batch);
      const ad::Tensor loss = lossFn(fw.unit, y, m);
      lossSum += loss.item() * m.sum();
      cellSum += m.sum();
      opt.zeroGrad();
      ad::backward(loss);
      opt.step();
    }
    const auto ev = evaluate(model, dev, cfg.batchSize);
    model.history.push_back({static_cast<long>(model.history.size()) + 1, lossSum / cellSum, ev.loss, ev.pearson});
    rep.epochsRun = epoch;
    if (ev.loss < rep.bestDevLoss) {
      rep.bestDevLoss = ev.loss;
      rep.bestEpoch = epoch;
      best = detail::snapshot(model);
      sinceBest = 0;
    } else if (++sinceBest >= cfg.earlyStopPatience) {
      rep.stoppedEarly = true;
      break;
    }
  }
  detail::restore(model, best);
  return rep;
}

// Fresh normalization fitted on the training split, then training.
inline TrainReport train(MeModel& model, const std::vector<Example>& trainSet, const std::vector<Example>& devSet,
                         const TrainConfig& cfg) {
  if (trainSet.empty()) throw InvalidArgument("train: empty training split");
  fitNormalization(model, trainSet, true);
  return trainModel(model, trainSet, devSet, cfg);
}

// Continues training on new targets with every parameter trainable. The BPE
// model and feature normalizer are kept; the output layer is re-initialized
// when the target list changes and target transforms are refitted.
inline TrainReport fineTune(MeModel& model, const std::vector<std::string>& targets, const std::vector<Example>& trainSet,
                            const std::vector<Example>& devSet, const TrainConfig& cfg) {
  if (targets != model.config.targets) {
    Rng rng = Rng(cfg.seed).fork(3);
    model.resetHead(targets, rng);
  }
  for (const auto* set : {&trainSet, &devSet}) {
    for (const auto& ex : *set) {
      if (static_cast<long>(ex.features.size()) != model.config.featureDim()) {
        throw InvalidArgument("fineTune: examples carry " + std::to_string(ex.features.size()) +
                              " features but the checkpoint expects " + std::to_string(model.config.featureDim()));
      }
      for (int id : ex.ids) {
        if (id < 0 || id >= model.config.vocabSize) throw InvalidArgument("fineTune: token id outside the vocabulary");
      }
    }
  }
  if (trainSet.empty()) throw InvalidArgument("fineTune: empty training split");
  fitNormalization(model, trainSet, false);
  return trainModel(model, trainSet, devSet, cfg);
}

struct PredictionRow {
  std::string segmentId;
  long hypIndex = -1;
  std::vector<double> values;  // one per target, target units
  std::string error;           // non-empty when the segment could not be scored
};

// Eval-mode predictions for every hypothesis; segments that cannot be
// assembled yield one error row and the run continues.
inline std::vector<PredictionRow> predict(const MeModel& model, const Dataset& segments, long batchSize = 32) {
  std::vector<PredictionRow> rows;
  std::vector<Example> pending;
  const auto flush = [&] {
    if (pending.empty()) return;
    const auto ev = evaluate(model, pending, batchSize);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      rows.push_back({pending[i].segmentId, static_cast<long>(pending[i].hypIndex), ev.predictions[i], ""});
    }
    pending.clear();
  };
  for (const auto& seg : segments) {
    std::vector<Example> exs;
    try {
      exs = segmentExamples(seg, seg.hyps.size(), model.config, model.bpe);
    } catch (const std::exception& e) {
      flush();
      rows.push_back({seg.id, -1, {}, e.what()});
      continue;
    }
    for (auto& ex : exs) pending.push_back(std::move(ex));
    if (static_cast<long>(pending.size()) >= 256) flush();
  }
  flush();
  return rows;
}

// Post-ReLU activations of the first head layer in eval mode.
inline std::vector<std::vector<double>> penultimate(const MeModel& model, const std::vector<Example>& set,
                                                    long batchSize = 32) {
  ad::NoGradGuard guard;
  Rng unused(0);
  const auto ptrs = detail::pointers(set);
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start < ptrs.size(); start += static_cast<std::size_t>(batchSize)) {
    const std::size_t end = std::min(ptrs.size(), start + static_cast<std::size_t>(batchSize));
    const auto fw = model.forward(std::span<const Example* const>(ptrs.data() + start, end - start), false, unused);
    const auto& h = fw.hidden.value();
    for (long r = 0; r < h.rows(); ++r) out.emplace_back(h.row(r).data(), h.row(r).data() + h.cols());
  }
  return out;
}

}  // namespace mtme
