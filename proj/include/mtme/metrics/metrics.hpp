#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/metrics/bleu.hpp"
#include "mtme/metrics/chrf.hpp"
#include "mtme/metrics/meteor.hpp"
#include "mtme/metrics/ter.hpp"

namespace mtme {

// Metric identifiers used as dataset score keys, CLI values and model targets.
namespace metric_id {
inline constexpr std::string_view kSentBleu = "sentbleu";
inline constexpr std::string_view kChrF = "chrf";
inline constexpr std::string_view kTer = "ter";
inline constexpr std::string_view kMeteor = "meteor";
inline constexpr std::string_view kExternalPrefix = "external:";
// Human judgement target (z-scores); not a metric but a valid model target.
inline constexpr std::string_view kHuman = "human";
}  // namespace metric_id

struct MetricScore {
  std::string metric;
  double value = 0.0;
  bool higherIsBetter = true;
};

inline bool isExternalMetric(std::string_view id) {
  return id.size() > metric_id::kExternalPrefix.size() && id.substr(0, metric_id::kExternalPrefix.size()) == metric_id::kExternalPrefix;
}

inline bool isComputableMetric(std::string_view id) {
  return id == metric_id::kSentBleu || id == metric_id::kChrF || id == metric_id::kTer || id == metric_id::kMeteor;
}

inline bool isMetricId(std::string_view id) { return isComputableMetric(id) || isExternalMetric(id); }

inline bool isTargetId(std::string_view id) { return isMetricId(id) || id == metric_id::kHuman; }

// Targets without a fixed [0, 1] range.
inline bool isUnboundedTarget(std::string_view id) {
  return id == metric_id::kTer || id == metric_id::kHuman || isExternalMetric(id);
}

inline const std::vector<std::string>& computableMetrics() {
  static const std::vector<std::string> ids{"sentbleu", "chrf", "ter", "meteor"};
  return ids;
}

inline MetricScore sentBleu(std::string_view hyp, std::string_view ref) {
  return {std::string(metric_id::kSentBleu), sentBleuValue(hyp, ref), true};
}

inline MetricScore chrF(std::string_view hyp, std::string_view ref) {
  return {std::string(metric_id::kChrF), chrFValue(hyp, ref), true};
}

inline MetricScore ter(std::string_view hyp, std::string_view ref) {
  return {std::string(metric_id::kTer), terValue(hyp, ref), false};
}

inline MetricScore meteorLite(std::string_view hyp, std::string_view ref) {
  return {std::string(metric_id::kMeteor), meteorLiteValue(hyp, ref), true};
}

inline MetricScore scoreOne(std::string_view id, std::string_view hyp, std::string_view ref) {
  if (id == metric_id::kSentBleu) return sentBleu(hyp, ref);
  if (id == metric_id::kChrF) return chrF(hyp, ref);
  if (id == metric_id::kTer) return ter(hyp, ref);
  if (id == metric_id::kMeteor) return meteorLite(hyp, ref);
  if (isExternalMetric(id)) throw InvalidArgument("metric '" + std::string(id) + "' is external and cannot be computed");
  throw InvalidArgument("unknown metric '" + std::string(id) + "'");
}

inline std::map<std::string, MetricScore> scoreAll(std::string_view hyp, std::string_view ref,
                                                   const std::vector<std::string>& metrics) {
  for (const auto& m : metrics) {
    if (!isComputableMetric(m)) (void)scoreOne(m, hyp, ref);  // throws with the right message
  }
  std::map<std::string, MetricScore> out;
  for (const auto& m : metrics) out.emplace(m, scoreOne(m, hyp, ref));
  return out;
}

}  // namespace mtme
