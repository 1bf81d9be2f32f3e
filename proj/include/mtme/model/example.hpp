#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/features/glassbox.hpp"
#include "mtme/metrics/metrics.hpp"
#include "mtme/model/config.hpp"
#include "mtme/text/bpe.hpp"
#include "mtme/text/input.hpp"

namespace mtme {

// One (source, hypothesis) training or prediction item.
struct Example {
  std::string segmentId;
  std::size_t hypIndex = 0;
  std::vector<int> ids;
  std::vector<double> features;  // raw, before normalization
  std::vector<std::optional<double>> targets;
};

inline std::optional<double> targetValue(const Hypothesis& h, const std::string& target) {
  if (target == metric_id::kHuman) return h.humanZ;
  auto it = h.scores.find(target);
  if (it == h.scores.end()) return std::nullopt;
  return it->second;
}

// Examples for the first min(k, |hyps|) hypotheses of a segment. Throws when
// a field required by the config is missing.
inline std::vector<Example> segmentExamples(const Segment& seg, std::size_t k, const MeModelConfig& cfg,
                                            const BpeModel& bpe) {
  const std::size_t n = std::min(k, seg.hyps.size());
  std::vector<Example> out;
  if (n == 0) return out;
  if (usesReference(cfg.inputMode) && !seg.ref) {
    throw InvalidArgument("segment '" + seg.id + "' has no reference but input mode " +
                          std::string(toString(cfg.inputMode)) + " needs one");
  }
  const auto feats = buildFeatureVectors(seg, cfg.features);
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.segmentId = seg.id;
    ex.hypIndex = i;
    ex.ids = assembleInput(cfg.inputMode, seg.src, seg.hyps[i].text, seg.ref, bpe);
    if (ex.ids.empty()) {
      throw InvalidArgument("segment '" + seg.id + "' hypothesis " + std::to_string(i) + " yields an empty model input");
    }
    ex.features = feats[i];
    for (const auto& t : cfg.targets) ex.targets.push_back(targetValue(seg.hyps[i], t));
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace mtme
