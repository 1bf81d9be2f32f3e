#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtme/autodiff/lstm.hpp"
#include "mtme/autodiff/tensor.hpp"
#include "mtme/error.hpp"
#include "mtme/features/normalizer.hpp"
#include "mtme/model/config.hpp"
#include "mtme/model/example.hpp"
#include "mtme/text/bpe.hpp"
#include "mtme/util/rng.hpp"

namespace mtme {

struct EpochRecord {
  long epoch = 0;
  double trainLoss = 0.0;
  double devLoss = 0.0;
  std::map<std::string, std::optional<double>> devPearson;

  bool operator==(const EpochRecord&) const = default;
};

// Embedding, stacked BiLSTM, fusion with glassbox features and a two-layer
// regression head with sigmoid outputs.
class MeModel {
 public:
  MeModelConfig config;
  BpeModel bpe;
  FeatureNormalizer featureNorm;
  std::vector<TargetTransform> transforms;
  std::vector<EpochRecord> history;

  ad::Tensor embed;
  std::vector<ad::BiLstmLayer> lstm;
  ad::Tensor l1W, l1b, outW, outB;

  static MeModel init(const MeModelConfig& cfg, BpeModel bpe, std::uint64_t seed) {
    cfg.validate();
    if (static_cast<long>(bpe.size()) > cfg.vocabSize) {
      throw InvalidArgument("initModel: BPE vocabulary of " + std::to_string(bpe.size()) +
                            " symbols exceeds configured vocab_size " + std::to_string(cfg.vocabSize));
    }
    MeModel m;
    m.config = cfg;
    m.bpe = std::move(bpe);
    m.featureNorm.mean.assign(static_cast<std::size_t>(cfg.featureDim()), 0.0);
    m.featureNorm.std.assign(static_cast<std::size_t>(cfg.featureDim()), 1.0);
    for (const auto& t : cfg.targets) m.transforms.push_back({t, 0.0, 1.0});

    Rng rng(seed);
    m.embed = ad::Tensor::parameter(ad::uniformInit(cfg.vocabSize, cfg.embedDim, rng));
    long in = cfg.embedDim;
    for (long l = 0; l < cfg.layers; ++l) {
      ad::BiLstmLayer layer;
      layer.fwd = ad::makeLstmWeights(in, cfg.hiddenDim, rng);
      layer.bwd = ad::makeLstmWeights(in, cfg.hiddenDim, rng);
      m.lstm.push_back(std::move(layer));
      in = 2 * cfg.hiddenDim;
    }
    m.l1W = ad::Tensor::parameter(ad::uniformInit(cfg.fusionWidth(), cfg.headHidden, rng));
    m.l1b = ad::Tensor::parameter(ad::uniformInit(1, cfg.headHidden, rng));
    m.outW = ad::Tensor::parameter(ad::uniformInit(cfg.headHidden, cfg.numTargets(), rng));
    m.outB = ad::Tensor::parameter(ad::uniformInit(1, cfg.numTargets(), rng));
    return m;
  }

  // Parameters in checkpoint order with their persisted names.
  std::vector<std::pair<std::string, ad::Tensor>> namedParameters() const {
    std::vector<std::pair<std::string, ad::Tensor>> out{{"embed", embed}};
    for (std::size_t l = 0; l < lstm.size(); ++l) {
      const std::string p = "lstm.L" + std::to_string(l) + ".";
      for (const auto& [dir, w] : {std::pair{"fwd", &lstm[l].fwd}, std::pair{"bwd", &lstm[l].bwd}}) {
        out.push_back({p + dir + ".W_x", w->Wx});
        out.push_back({p + dir + ".W_h", w->Wh});
        out.push_back({p + dir + ".b", w->b});
      }
    }
    out.push_back({"head.l1.W", l1W});
    out.push_back({"head.l1.b", l1b});
    out.push_back({"head.out.W", outW});
    out.push_back({"head.out.b", outB});
    return out;
  }

  std::vector<ad::Tensor> parameters() const {
    std::vector<ad::Tensor> out;
    for (auto& [n, t] : namedParameters()) out.push_back(t);
    return out;
  }

  // Expected shape of every named parameter under the current config.
  std::map<std::string, std::pair<long, long>> expectedShapes() const {
    const auto& c = config;
    std::map<std::string, std::pair<long, long>> s{{"embed", {c.vocabSize, c.embedDim}}};
    long in = c.embedDim;
    for (long l = 0; l < c.layers; ++l) {
      const std::string p = "lstm.L" + std::to_string(l) + ".";
      for (const char* dir : {"fwd", "bwd"}) {
        s[p + dir + ".W_x"] = {in, 4 * c.hiddenDim};
        s[p + dir + ".W_h"] = {c.hiddenDim, 4 * c.hiddenDim};
        s[p + dir + ".b"] = {1, 4 * c.hiddenDim};
      }
      in = 2 * c.hiddenDim;
    }
    s["head.l1.W"] = {c.fusionWidth(), c.headHidden};
    s["head.l1.b"] = {1, c.headHidden};
    s["head.out.W"] = {c.headHidden, c.numTargets()};
    s["head.out.b"] = {1, c.numTargets()};
    return s;
  }

  // Replaces the output layer for a new target list; everything else is kept.
  void resetHead(const std::vector<std::string>& targets, Rng& rng) {
    config.targets = targets;
    config.validate();
    outW = ad::Tensor::parameter(ad::uniformInit(config.headHidden, config.numTargets(), rng));
    outB = ad::Tensor::parameter(ad::uniformInit(1, config.numTargets(), rng));
    transforms.clear();
    for (const auto& t : targets) transforms.push_back({t, 0.0, 1.0});
  }

  struct Forward {
    ad::Tensor unit;    // (B, numTargets) sigmoid outputs
    ad::Tensor hidden;  // (B, headHidden) post-ReLU activations
    ad::Tensor phi;     // (B, encoderWidth) encoder summary before dropout
  };

  Forward forward(std::span<const Example* const> batch, bool training, Rng& rng) const {
    if (batch.empty()) throw InvalidArgument("forward: empty batch");
    const long B = static_cast<long>(batch.size());
    std::size_t T = 0;
    for (const Example* ex : batch) {
      if (ex->ids.empty()) throw InvalidArgument("forward: example '" + ex->segmentId + "' has an empty input");
      if (static_cast<long>(ex->features.size()) != config.featureDim()) {
        throw InvalidArgument("forward: expected " + std::to_string(config.featureDim()) + " features, got " +
                              std::to_string(ex->features.size()));
      }
      T = std::max(T, ex->ids.size());
    }
    std::vector<ad::Tensor> steps;
    std::vector<std::vector<char>> mask(T, std::vector<char>(static_cast<std::size_t>(B), 0));
    std::vector<int> col(static_cast<std::size_t>(B));
    for (std::size_t t = 0; t < T; ++t) {
      for (long b = 0; b < B; ++b) {
        const auto& ids = batch[static_cast<std::size_t>(b)]->ids;
        const bool real = t < ids.size() && ids[t] != BpeModel::kPad;
        col[static_cast<std::size_t>(b)] = real ? ids[t] : BpeModel::kPad;
        mask[t][static_cast<std::size_t>(b)] = real;
      }
      steps.push_back(ad::embedding(embed, col));
    }
    const auto enc = ad::biLstm(steps, mask, lstm, config.interLayerDropout, training, rng);
    Forward out;
    out.phi = ad::concatCols(enc.finalStates);
    ad::Tensor fused = ad::dropout(out.phi, config.finalDropout, training, rng);
    if (config.featureDim() > 0) {
      ad::Mat f(B, config.featureDim());
      for (long b = 0; b < B; ++b) {
        const auto z = featureNorm.apply(batch[static_cast<std::size_t>(b)]->features);
        for (long k = 0; k < config.featureDim(); ++k) f(b, k) = z[static_cast<std::size_t>(k)];
      }
      fused = ad::concatCols({fused, ad::Tensor::constant(std::move(f))});
    }
    out.hidden = ad::relu(ad::addRow(ad::matmul(fused, l1W), l1b));
    out.unit = ad::sigmoid(ad::addRow(ad::matmul(out.hidden, outW), outB));
    return out;
  }

  // Targets in sigmoid space plus the presence mask, (B, numTargets) each.
  std::pair<ad::Mat, ad::Mat> unitTargets(std::span<const Example* const> batch) const {
    const long B = static_cast<long>(batch.size());
    ad::Mat y = ad::Mat::Zero(B, config.numTargets());
    ad::Mat m = ad::Mat::Zero(B, config.numTargets());
    for (long b = 0; b < B; ++b) {
      const auto& tg = batch[static_cast<std::size_t>(b)]->targets;
      if (static_cast<long>(tg.size()) != config.numTargets()) throw InvalidArgument("example target count mismatch");
      for (long k = 0; k < config.numTargets(); ++k) {
        if (!tg[static_cast<std::size_t>(k)]) continue;
        y(b, k) = transforms[static_cast<std::size_t>(k)].toUnit(*tg[static_cast<std::size_t>(k)]);
        m(b, k) = 1.0;
      }
    }
    return {y, m};
  }

  // Sigmoid outputs mapped to target units.
  std::vector<std::vector<double>> denormalize(const ad::Mat& unit) const {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(unit.rows()));
    for (long b = 0; b < unit.rows(); ++b) {
      for (long k = 0; k < unit.cols(); ++k) {
        out[static_cast<std::size_t>(b)].push_back(transforms[static_cast<std::size_t>(k)].toTarget(unit(b, k)));
      }
    }
    return out;
  }
};

// Mean squared error over present (example, target) cells in sigmoid space.
inline ad::Tensor lossFn(const ad::Tensor& predictions, const ad::Mat& targets, const ad::Mat& mask) {
  return ad::maskedMse(predictions, ad::Tensor::constant(targets), mask);
}

inline MeModel initModel(const MeModelConfig& cfg, BpeModel bpe, std::uint64_t seed) {
  return MeModel::init(cfg, std::move(bpe), seed);
}

}  // namespace mtme
