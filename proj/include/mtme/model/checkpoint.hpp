#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <nlohmann/json.hpp>

#include "mtme/error.hpp"
#include "mtme/model/me_model.hpp"

namespace mtme {

inline constexpr long kCheckpointFormatVersion = 1;

namespace b64 {

inline std::string encode(const std::string& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((4 - out.size() % 4) % 4, '=');
  return out;
}

// Strict decoding: canonical padding only, no whitespace.
inline std::string decode(const std::string& text) {
  using namespace boost::archive::iterators;
  if (text.size() % 4 != 0) throw CorruptCheckpoint("base64 payload length is not a multiple of 4");
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  const std::string body = text.substr(0, text.size() - pad);
  for (unsigned char c : body) {
    if (!(std::isalnum(c) || c == '+' || c == '/')) throw CorruptCheckpoint("invalid character in base64 payload");
  }
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string out(It(body.begin()), It(body.end()));
  out.resize(body.size() * 6 / 8);
  return out;
}

}  // namespace b64

inline std::string encodeDoubles(const ad::Mat& m) {
  std::string bytes(static_cast<std::size_t>(m.size()) * 8, '\0');
  for (long i = 0; i < m.size(); ++i) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(m.data()[i]);
    for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(i) * 8 + b] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  return b64::encode(bytes);
}

inline ad::Mat decodeDoubles(const std::string& text, long rows, long cols, const std::string& name) {
  const std::string bytes = b64::decode(text);
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 8) {
    throw CorruptCheckpoint("parameter '" + name + "' payload has " + std::to_string(bytes.size()) +
                            " bytes, expected " + std::to_string(rows * cols * 8));
  }
  ad::Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) {
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i) * 8 + b])) << (8 * b);
    }
    m.data()[i] = std::bit_cast<double>(u);
  }
  return m;
}

inline nlohmann::json historyToJson(const std::vector<EpochRecord>& history) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& e : history) {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [t, v] : e.devPearson) p[t] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    h.push_back({{"epoch", e.epoch}, {"train_loss", e.trainLoss}, {"dev_loss", e.devLoss}, {"dev_pearson", p}});
  }
  return h;
}

inline std::vector<EpochRecord> historyFromJson(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j) {
    EpochRecord r{e.at("epoch").get<long>(), e.at("train_loss").get<double>(), e.at("dev_loss").get<double>(), {}};
    for (const auto& [t, v] : e.at("dev_pearson").items()) {
      r.devPearson[t] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json checkpointToJson(const MeModel& m) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : m.namedParameters()) {
    params[name] = {{"shape", {t.rows(), t.cols()}}, {"data_b64", encodeDoubles(t.value())}};
  }
  nlohmann::json transforms = nlohmann::json::array();
  for (const auto& t : m.transforms) transforms.push_back(toJson(t));
  return {{"format_version", kCheckpointFormatVersion},
          {"model_kind", m.config.modelKind()},
          {"config", toJson(m.config)},
          {"bpe", toJson(m.bpe)},
          {"feature_norm", toJson(m.featureNorm)},
          {"target_transforms", transforms},
          {"params", params},
          {"history", historyToJson(m.history)}};
}

inline MeModel checkpointFromJson(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw CorruptCheckpoint("missing format_version");
    const long version = j["format_version"].get<long>();
    if (version != kCheckpointFormatVersion) throw UnsupportedVersion(version);

    const MeModelConfig cfg = modelConfigFromJson(j.at("config"));
    cfg.validate();
    if (j.at("model_kind").get<std::string>() != cfg.modelKind()) {
      throw CorruptCheckpoint("model_kind does not match the configured feature set");
    }
    MeModel m = MeModel::init(cfg, bpeFromJson(j.at("bpe")), 0);
    m.featureNorm = featureNormalizerFromJson(j.at("feature_norm"));
    if (static_cast<long>(m.featureNorm.dim()) != cfg.featureDim()) {
      throw CorruptCheckpoint("feature_norm width differs from the configured feature dimension");
    }
    m.transforms.clear();
    for (const auto& t : j.at("target_transforms")) m.transforms.push_back(targetTransformFromJson(t));
    if (static_cast<long>(m.transforms.size()) != cfg.numTargets()) {
      throw CorruptCheckpoint("target_transforms count differs from the target list");
    }
    for (std::size_t k = 0; k < m.transforms.size(); ++k) {
      if (m.transforms[k].target != cfg.targets[k]) throw CorruptCheckpoint("target_transforms order differs from targets");
    }

    const auto& params = j.at("params");
    const auto shapes = m.expectedShapes();
    if (params.size() != shapes.size()) {
      throw CorruptCheckpoint("checkpoint has " + std::to_string(params.size()) + " parameters, expected " +
                              std::to_string(shapes.size()));
    }
    for (auto& [name, t] : m.namedParameters()) {
      if (!params.contains(name)) throw CorruptCheckpoint("missing parameter '" + name + "'");
      const auto& p = params[name];
      const auto shape = p.at("shape").get<std::vector<long>>();
      const auto [er, ec] = shapes.at(name);
      if (shape.size() != 2 || shape[0] != er || shape[1] != ec) {
        throw CorruptCheckpoint("parameter '" + name + "' has a shape that does not match the config");
      }
      t.mutableValue() = decodeDoubles(p.at("data_b64").get<std::string>(), er, ec, name);
    }
    if (j.contains("history")) m.history = historyFromJson(j["history"]);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptCheckpoint(std::string("inconsistent checkpoint: ") + e.what());
  }
}

inline void saveCheckpoint(const MeModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpointToJson(m).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

inline MeModel loadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptCheckpoint("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpointFromJson(j);
}

}  // namespace mtme
