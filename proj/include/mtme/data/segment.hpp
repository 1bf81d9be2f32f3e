#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtme {

struct Hypothesis {
  std::string text;
  std::optional<double> logprob;
  std::optional<std::vector<double>> tokenLogprobs;
  std::map<std::string, double> scores;  // metric id -> value
  std::optional<double> humanRaw;
  std::optional<double> humanZ;
  std::optional<std::string> annotator;

  bool operator==(const Hypothesis&) const = default;
};

// One source sentence with its n-best list; hyps[0] is the top hypothesis.
struct Segment {
  std::string id;
  std::string src;
  std::optional<std::string> ref;
  std::vector<Hypothesis> hyps;

  bool operator==(const Segment&) const = default;
};

using Dataset = std::vector<Segment>;

}  // namespace mtme
