#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtme/error.hpp"
#include "mtme/text/bpe.hpp"

namespace mtme {

// Which texts the encoder sees, in sequence order.
enum class InputMode { SrcHyp, Hyp, Src, HypRef, SrcHypRef };

inline std::string_view toString(InputMode mode) {
  switch (mode) {
    case InputMode::SrcHyp: return "src_hyp";
    case InputMode::Hyp: return "hyp";
    case InputMode::Src: return "src";
    case InputMode::HypRef: return "hyp_ref";
    case InputMode::SrcHypRef: return "src_hyp_ref";
  }
  return "src_hyp";
}

inline InputMode parseInputMode(std::string_view name) {
  for (auto m : {InputMode::SrcHyp, InputMode::Hyp, InputMode::Src, InputMode::HypRef, InputMode::SrcHypRef}) {
    if (toString(m) == name) return m;
  }
  throw InvalidArgument("unknown input mode '" + std::string(name) + "'");
}

inline bool usesSource(InputMode m) { return m == InputMode::SrcHyp || m == InputMode::Src || m == InputMode::SrcHypRef; }
inline bool usesHypothesis(InputMode m) { return m != InputMode::Src; }
inline bool usesReference(InputMode m) { return m == InputMode::HypRef || m == InputMode::SrcHypRef; }

// Encodes the parts named by the mode and joins them with single SEP ids.
inline std::vector<int> assembleInput(InputMode mode, const std::optional<std::string>& src,
                                      const std::optional<std::string>& hyp,
                                      const std::optional<std::string>& ref, const BpeModel& model) {
  std::vector<const std::optional<std::string>*> parts;
  if (usesSource(mode)) parts.push_back(&src);
  if (usesHypothesis(mode)) parts.push_back(&hyp);
  if (usesReference(mode)) parts.push_back(&ref);

  std::vector<int> ids;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i]->has_value()) {
      throw InvalidArgument("assembleInput: input mode " + std::string(toString(mode)) + " requires a missing text");
    }
    if (i) ids.push_back(BpeModel::kSep);
    auto enc = bpeEncode(model, **parts[i]);
    ids.insert(ids.end(), enc.begin(), enc.end());
  }
  return ids;
}

}  // namespace mtme
