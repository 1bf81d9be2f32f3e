#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/data/segment.hpp"
#include "mtme/error.hpp"
#include "mtme/metrics/metrics.hpp"

namespace mtme {

inline nlohmann::json toJson(const Hypothesis& h) {
  nlohmann::json j{{"text", h.text}, {"scores", h.scores}};
  if (h.logprob) j["logprob"] = *h.logprob;
  if (h.tokenLogprobs) j["token_logprobs"] = *h.tokenLogprobs;
  if (h.humanRaw) j["human_raw"] = *h.humanRaw;
  if (h.humanZ) j["human_z"] = *h.humanZ;
  if (h.annotator) j["annotator"] = *h.annotator;
  return j;
}

inline nlohmann::json toJson(const Segment& s) {
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : s.hyps) hyps.push_back(toJson(h));
  nlohmann::json j{{"id", s.id}, {"src", s.src}, {"hyps", hyps}};
  if (s.ref) j["ref"] = *s.ref;
  return j;
}

namespace detail {

inline void requireType(bool ok, const std::string& field, const char* type) {
  if (!ok) throw InvalidArgument("field '" + field + "' must be " + type);
}

template <class T>
std::optional<T> optionalField(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace detail

inline Hypothesis hypothesisFromJson(const nlohmann::json& j) {
  detail::requireType(j.is_object(), "hyps[]", "an object");
  detail::requireType(j.contains("text") && j["text"].is_string(), "text", "a string");
  Hypothesis h;
  h.text = j["text"].get<std::string>();
  for (const char* k : {"logprob", "human_raw", "human_z"}) {
    if (j.contains(k) && !j[k].is_null()) detail::requireType(j[k].is_number(), k, "a number");
  }
  h.logprob = detail::optionalField<double>(j, "logprob");
  h.humanRaw = detail::optionalField<double>(j, "human_raw");
  h.humanZ = detail::optionalField<double>(j, "human_z");
  if (j.contains("annotator") && !j["annotator"].is_null()) {
    detail::requireType(j["annotator"].is_string(), "annotator", "a string");
    h.annotator = j["annotator"].get<std::string>();
  }
  if (j.contains("token_logprobs") && !j["token_logprobs"].is_null()) {
    const auto& t = j["token_logprobs"];
    detail::requireType(t.is_array(), "token_logprobs", "an array of numbers");
    std::vector<double> v;
    for (const auto& x : t) {
      detail::requireType(x.is_number(), "token_logprobs", "an array of numbers");
      v.push_back(x.get<double>());
    }
    h.tokenLogprobs = std::move(v);
  }
  if (j.contains("scores")) {
    detail::requireType(j["scores"].is_object(), "scores", "an object");
    for (const auto& [k, v] : j["scores"].items()) {
      if (!isMetricId(k)) throw InvalidArgument("unknown score key '" + k + "'");
      detail::requireType(v.is_number(), "scores." + k, "a number");
      h.scores[k] = v.get<double>();
    }
  }
  return h;
}

inline Segment segmentFromJson(const nlohmann::json& j) {
  detail::requireType(j.is_object(), "segment", "a JSON object");
  detail::requireType(j.contains("id") && j["id"].is_string(), "id", "a string");
  detail::requireType(j.contains("src") && j["src"].is_string(), "src", "a string");
  detail::requireType(j.contains("hyps") && j["hyps"].is_array(), "hyps", "an array");
  Segment s;
  s.id = j["id"].get<std::string>();
  s.src = j["src"].get<std::string>();
  if (j.contains("ref") && !j["ref"].is_null()) {
    detail::requireType(j["ref"].is_string(), "ref", "a string");
    s.ref = j["ref"].get<std::string>();
  }
  for (const auto& h : j["hyps"]) s.hyps.push_back(hypothesisFromJson(h));
  if (s.hyps.empty()) throw InvalidArgument("segment '" + s.id + "' has no hypotheses");
  return s;
}

inline Dataset parseJsonl(std::istream& in) {
  Dataset out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(segmentFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

inline Dataset loadJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read dataset '" + path + "'");
  return parseJsonl(in);
}

inline void writeJsonl(const Dataset& data, std::ostream& out) {
  for (const auto& s : data) out << toJson(s).dump() << '\n';
}

inline void saveJsonl(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  writeJsonl(data, out);
}

}  // namespace mtme
