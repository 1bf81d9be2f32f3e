#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/error.hpp"
#include "mtme/features/glassbox.hpp"
#include "mtme/metrics/metrics.hpp"
#include "mtme/text/input.hpp"

namespace mtme {

struct MeModelConfig {
  long vocabSize = 8192;
  long embedDim = 512;
  long hiddenDim = 128;
  long layers = 2;
  FeatureSet features = FeatureSet::Default6;
  long headHidden = 100;
  InputMode inputMode = InputMode::SrcHyp;
  std::vector<std::string> targets{"sentbleu"};
  double interLayerDropout = 0.2;
  double finalDropout = 0.75;

  long featureDim() const { return static_cast<long>(mtme::featureDim(features)); }
  long numTargets() const { return static_cast<long>(targets.size()); }
  long encoderWidth() const { return 2 * layers * hiddenDim; }
  long fusionWidth() const { return encoderWidth() + featureDim(); }
  std::string modelKind() const { return features == FeatureSet::None ? "me_text" : "me_all"; }

  void validate() const {
    if (vocabSize <= 3 || embedDim < 1 || hiddenDim < 1 || layers < 1 || headHidden < 1) {
      throw InvalidArgument("model config: dimensions must be positive and vocabulary larger than the reserved ids");
    }
    if (targets.empty()) throw InvalidArgument("model config: at least one target is required");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!isTargetId(targets[i])) throw InvalidArgument("model config: unknown target '" + targets[i] + "'");
      for (std::size_t j = 0; j < i; ++j) {
        if (targets[i] == targets[j]) throw InvalidArgument("model config: duplicate target '" + targets[i] + "'");
      }
    }
    if (interLayerDropout < 0 || interLayerDropout >= 1 || finalDropout < 0 || finalDropout >= 1) {
      throw InvalidArgument("model config: dropout rates must be in [0, 1)");
    }
  }
};

inline nlohmann::json toJson(const MeModelConfig& c) {
  return {{"vocab_size", c.vocabSize},
          {"embed_dim", c.embedDim},
          {"hidden_dim", c.hiddenDim},
          {"layers", c.layers},
          {"features", std::string(toString(c.features))},
          {"feature_dim", c.featureDim()},
          {"head_hidden", c.headHidden},
          {"num_targets", c.numTargets()},
          {"input_mode", std::string(toString(c.inputMode))},
          {"targets", c.targets},
          {"inter_layer_dropout", c.interLayerDropout},
          {"final_dropout", c.finalDropout}};
}

// Reads the keys present in j on top of the defaults in base.
inline MeModelConfig modelConfigFromJson(const nlohmann::json& j, MeModelConfig base = {}) {
  if (j.contains("vocab_size")) base.vocabSize = j["vocab_size"].get<long>();
  if (j.contains("embed_dim")) base.embedDim = j["embed_dim"].get<long>();
  if (j.contains("hidden_dim")) base.hiddenDim = j["hidden_dim"].get<long>();
  if (j.contains("layers")) base.layers = j["layers"].get<long>();
  if (j.contains("features")) base.features = parseFeatureSet(j["features"].get<std::string>());
  if (j.contains("head_hidden")) base.headHidden = j["head_hidden"].get<long>();
  if (j.contains("input_mode")) base.inputMode = parseInputMode(j["input_mode"].get<std::string>());
  if (j.contains("targets")) base.targets = j["targets"].get<std::vector<std::string>>();
  if (j.contains("inter_layer_dropout")) base.interLayerDropout = j["inter_layer_dropout"].get<double>();
  if (j.contains("final_dropout")) base.finalDropout = j["final_dropout"].get<double>();
  if (j.contains("feature_dim") && j["feature_dim"].get<long>() != base.featureDim()) {
    throw InvalidArgument("model config: feature_dim does not match feature set " + std::string(toString(base.features)));
  }
  if (j.contains("num_targets") && j["num_targets"].get<long>() != base.numTargets()) {
    throw InvalidArgument("model config: num_targets does not match the target list");
  }
  return base;
}

struct TrainConfig {
  double learningRate = 1e-6;
  long batchSize = 10;
  long earlyStopPatience = 10;
  long maxEpochs = 100;
  std::uint64_t seed = 0;
  double devFraction = 0.1;

  void validate() const {
    if (batchSize < 1) throw InvalidArgument("train config: batch size must be >= 1");
    if (earlyStopPatience < 1) throw InvalidArgument("train config: patience must be >= 1");
    if (maxEpochs < 1) throw InvalidArgument("train config: max epochs must be >= 1");
    if (!(learningRate > 0)) throw InvalidArgument("train config: learning rate must be positive");
    if (devFraction < 0 || devFraction >= 1) throw InvalidArgument("train config: dev fraction must be in [0, 1)");
  }
};

inline nlohmann::json toJson(const TrainConfig& c) {
  return {{"learning_rate", c.learningRate}, {"batch_size", c.batchSize},   {"patience", c.earlyStopPatience},
          {"max_epochs", c.maxEpochs},       {"seed", c.seed},              {"dev_fraction", c.devFraction}};
}

inline TrainConfig trainConfigFromJson(const nlohmann::json& j, TrainConfig base = {}) {
  if (j.contains("learning_rate")) base.learningRate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) base.batchSize = j["batch_size"].get<long>();
  if (j.contains("patience")) base.earlyStopPatience = j["patience"].get<long>();
  if (j.contains("max_epochs")) base.maxEpochs = j["max_epochs"].get<long>();
  if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("dev_fraction")) base.devFraction = j["dev_fraction"].get<double>();
  return base;
}

// Positive affine map from the sigmoid range (0, 1) onto a target's units:
// value = offset + scale * s.
struct TargetTransform {
  std::string target;
  double offset = 0.0;
  double scale = 1.0;

  static constexpr double kClip = 1e-6;

  double toTarget(double s) const { return offset + scale * s; }
  double toUnit(double value) const { return std::clamp((value - offset) / scale, kClip, 1.0 - kClip); }

  // Bounded targets use the observed range widened by 5% on each side;
  // unbounded ones use mean +- 3 standard deviations.
  static TargetTransform fit(const std::string& target, const std::vector<double>& values) {
    if (values.empty()) throw InvalidArgument("TargetTransform: no values for target " + target);
    TargetTransform t{target, 0.0, 1.0};
    double lo, hi;
    if (isUnboundedTarget(target)) {
      double mean = 0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double ss = 0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
      lo = mean - 3 * sd;
      hi = mean + 3 * sd;
    } else {
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      const double margin = 0.05 * (*mx - *mn);
      lo = *mn - margin;
      hi = *mx + margin;
    }
    if (!(hi - lo > 1e-12)) {
      lo -= 0.5;
      hi += 0.5;
    }
    t.offset = lo;
    t.scale = hi - lo;
    return t;
  }
};

inline nlohmann::json toJson(const TargetTransform& t) {
  return {{"target", t.target}, {"offset", t.offset}, {"scale", t.scale}};
}

inline TargetTransform targetTransformFromJson(const nlohmann::json& j) {
  TargetTransform t{j.at("target").get<std::string>(), j.at("offset").get<double>(), j.at("scale").get<double>()};
  if (!(t.scale > 0) || !std::isfinite(t.scale) || !std::isfinite(t.offset)) {
    throw CorruptCheckpoint("target transform for '" + t.target + "' has a non-positive scale");
  }
  return t;
}

}  // namespace mtme
