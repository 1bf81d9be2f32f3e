#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtme/baselines/linear.hpp"
#include "mtme/data/dataset_ops.hpp"
#include "mtme/data/jsonl.hpp"
#include "mtme/model/checkpoint.hpp"
#include "mtme/model/train.hpp"
#include "mtme/stats/report.hpp"

namespace mtme {

inline const std::vector<std::string> kExperimentModelKinds{"me", "linreg_tfidf", "linreg_features"};

struct FineTuneStage {
  std::string data;
  std::string target = "human";
  std::vector<long> sizes{200};
  long devCount = 0;
  bool scratch = true;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string trainData;
  std::string devData;  // empty: split devCount segments off the training data
  long devCount = 0;    // 0 with no devData: devFraction of the training data
  std::vector<std::pair<std::string, std::string>> transferData;  // name, path
  std::vector<std::vector<std::string>> targetSets{{"sentbleu"}};
  std::string modelKind = "me";
  MeModelConfig model;
  TrainConfig train;
  std::vector<long> trainSizes{0};  // 0 uses all training segments
  std::vector<long> ks{1};
  std::vector<std::uint64_t> seeds{1};
  std::optional<FineTuneStage> finetune;

  void validate() const {
    if (trainData.empty()) throw InvalidArgument("experiment: train_data is required");
    if (targetSets.empty() || trainSizes.empty() || ks.empty() || seeds.empty()) {
      throw InvalidArgument("experiment: targets, train_sizes, k and seeds must be non-empty");
    }
    if (std::find(kExperimentModelKinds.begin(), kExperimentModelKinds.end(), modelKind) ==
        kExperimentModelKinds.end()) {
      throw InvalidArgument("experiment: unknown model kind '" + modelKind + "'");
    }
    for (const auto& set : targetSets) {
      auto cfg = model;
      cfg.targets = set;
      cfg.validate();
    }
    for (long k : ks) {
      if (k < 1) throw InvalidArgument("experiment: k must be >= 1");
    }
    for (long n : trainSizes) {
      if (n < 0) throw InvalidArgument("experiment: train sizes must be >= 0");
    }
    if (devCount < 0) throw InvalidArgument("experiment: dev_count must be >= 0");
    train.validate();
    if (finetune) {
      if (finetune->data.empty()) throw InvalidArgument("experiment: finetune.data is required");
      if (!isTargetId(finetune->target)) throw InvalidArgument("experiment: unknown fine-tune target");
      if (finetune->sizes.empty()) throw InvalidArgument("experiment: finetune.sizes must be non-empty");
      if (modelKind != "me") throw InvalidArgument("experiment: fine-tuning needs model kind 'me'");
    }
  }
};

inline nlohmann::json toJson(const ExperimentSpec& s) {
  nlohmann::json transfer = nlohmann::json::array();
  for (const auto& [name, path] : s.transferData) transfer.push_back({{"name", name}, {"path", path}});
  nlohmann::json j{{"name", s.name},
                   {"train_data", s.trainData},
                   {"dev_data", s.devData},
                   {"dev_count", s.devCount},
                   {"transfer_data", transfer},
                   {"targets", s.targetSets},
                   {"model_kind", s.modelKind},
                   {"model", toJson(s.model)},
                   {"train", toJson(s.train)},
                   {"train_sizes", s.trainSizes},
                   {"k", s.ks},
                   {"seeds", s.seeds}};
  if (s.finetune) {
    j["finetune"] = {{"data", s.finetune->data},
                     {"target", s.finetune->target},
                     {"sizes", s.finetune->sizes},
                     {"dev_count", s.finetune->devCount},
                     {"scratch", s.finetune->scratch}};
  }
  return j;
}

// Relative data paths are resolved against baseDir.
inline ExperimentSpec experimentSpecFromJson(const nlohmann::json& j, const std::string& baseDir = "") {
  const auto resolve = [&](const std::string& p) {
    if (p.empty() || baseDir.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(baseDir) / p).string();
  };
  ExperimentSpec s;
  try {
    if (!j.is_object()) throw InvalidArgument("experiment spec must be a JSON object");
    s.name = j.value("name", s.name);
    s.trainData = resolve(j.at("train_data").get<std::string>());
    s.devData = resolve(j.value("dev_data", std::string()));
    s.devCount = j.value("dev_count", 0L);
    if (j.contains("transfer_data")) {
      for (const auto& t : j["transfer_data"]) {
        if (t.is_string()) {
          const auto p = t.get<std::string>();
          s.transferData.emplace_back(std::filesystem::path(p).stem().string(), resolve(p));
        } else {
          s.transferData.emplace_back(t.at("name").get<std::string>(), resolve(t.at("path").get<std::string>()));
        }
      }
    }
    if (j.contains("targets")) {
      s.targetSets.clear();
      for (const auto& t : j["targets"]) {
        if (t.is_string()) {
          s.targetSets.push_back({t.get<std::string>()});
        } else {
          s.targetSets.push_back(t.get<std::vector<std::string>>());
        }
      }
    }
    s.modelKind = j.value("model_kind", s.modelKind);
    if (j.contains("model")) s.model = modelConfigFromJson(j["model"]);
    if (j.contains("train")) s.train = trainConfigFromJson(j["train"]);
    if (j.contains("train_sizes")) s.trainSizes = j["train_sizes"].get<std::vector<long>>();
    if (j.contains("k")) s.ks = j["k"].get<std::vector<long>>();
    if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("finetune") && !j["finetune"].is_null()) {
      const auto& f = j["finetune"];
      FineTuneStage ft;
      ft.data = resolve(f.at("data").get<std::string>());
      ft.target = f.value("target", ft.target);
      if (f.contains("sizes")) ft.sizes = f["sizes"].get<std::vector<long>>();
      ft.devCount = f.value("dev_count", 0L);
      ft.scratch = f.value("scratch", true);
      s.finetune = ft;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

struct ExperimentInputs {
  Dataset train;
  Dataset dev;
  std::vector<std::pair<std::string, Dataset>> transfer;
  Dataset finetuneTrain;
  Dataset finetuneDev;
};

// Dev correlation per target over the examples that carry that target.
inline CorrelationReport modelReport(const MeModel& m, const std::vector<Example>& set) {
  const auto ev = evaluate(m, set);
  CorrelationReport r;
  for (std::size_t t = 0; t < m.config.targets.size(); ++t) {
    KeyedValues pred, gold;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!set[i].targets[t]) continue;
      const auto key = set[i].segmentId + "#" + std::to_string(set[i].hypIndex);
      pred[key] = ev.predictions[i][t];
      gold[key] = *set[i].targets[t];
    }
    r.rows.push_back(correlationRow(m.config.targets[t], pred, gold));
  }
  return r;
}

namespace detail {

inline std::size_t devSize(long requested, double fraction, std::size_t total) {
  std::size_t n = requested > 0 ? static_cast<std::size_t>(requested)
                                : static_cast<std::size_t>(fraction * static_cast<double>(total));
  return std::max<std::size_t>(1, n);
}

}  // namespace detail

// Splits use seed 0 so that every grid cell sees the same dev data.
inline ExperimentInputs prepareInputs(const ExperimentSpec& spec, Dataset train, std::optional<Dataset> dev,
                                      std::vector<std::pair<std::string, Dataset>> transfer,
                                      std::optional<Dataset> finetune) {
  ExperimentInputs in;
  if (dev) {
    in.train = std::move(train);
    in.dev = std::move(*dev);
  } else {
    auto sp = splitDataset(train, detail::devSize(spec.devCount, spec.train.devFraction, train.size()), 0);
    in.train = std::move(sp.train);
    in.dev = std::move(sp.dev);
  }
  in.transfer = std::move(transfer);
  if (finetune) {
    deriveHumanZ(*finetune);
    auto sp = splitDataset(*finetune, detail::devSize(spec.finetune->devCount, spec.train.devFraction, finetune->size()), 0);
    in.finetuneTrain = std::move(sp.train);
    in.finetuneDev = std::move(sp.dev);
  }
  deriveHumanZ(in.train);
  deriveHumanZ(in.dev);
  for (auto& [name, d] : in.transfer) deriveHumanZ(d);
  return in;
}

inline ExperimentInputs loadExperimentInputs(const ExperimentSpec& spec) {
  auto train = loadJsonl(spec.trainData);
  std::optional<Dataset> dev;
  if (!spec.devData.empty()) dev = loadJsonl(spec.devData);
  std::vector<std::pair<std::string, Dataset>> transfer;
  for (const auto& [name, path] : spec.transferData) transfer.emplace_back(name, loadJsonl(path));
  std::optional<Dataset> ft;
  if (spec.finetune) ft = loadJsonl(spec.finetune->data);
  return prepareInputs(spec, std::move(train), std::move(dev), std::move(transfer), std::move(ft));
}

struct TransferResult {
  std::string dataset;
  CorrelationReport report;
};

struct CellResult {
  std::string id;
  std::vector<std::string> targets;
  long size = 0;
  long k = 1;
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::size_t trainPairs = 0;
  CorrelationReport report;
  std::vector<EpochRecord> history;
  std::vector<TransferResult> transfer;
  nlohmann::json extra;  // baseline grid logs
};

struct FineTuneRow {
  std::string cellId;  // empty for from-scratch runs
  std::string stage;   // zero_shot, finetune, scratch
  std::string pretrain;
  long size = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::optional<double> pearson;
  std::string status = "ok";
};

struct CiRow {
  std::string stage;
  std::string targets;
  std::string target;
  long size = 0;
  long k = 0;
  std::size_t runs = 0;
  std::optional<double> mean;
  std::optional<MeanInterval> ci;
};

struct ExperimentBundle {
  nlohmann::json spec;
  std::vector<CellResult> cells;
  std::vector<FineTuneRow> finetune;
  std::vector<CiRow> ci;
};

inline std::string joinTargets(const std::vector<std::string>& ts) {
  std::string s;
  for (const auto& t : ts) s += (s.empty() ? "" : "+") + t;
  return s;
}

namespace detail {

inline std::vector<TrainingPair> pairsWithTarget(const std::vector<TrainingPair>& pairs, const std::string& target) {
  std::vector<TrainingPair> out;
  for (const auto& p : pairs) {
    if (target == metric_id::kHuman ? p.humanZ.has_value() : p.scores.count(target) > 0) out.push_back(p);
  }
  return out;
}

inline CorrelationRow baselineRow(const std::string& target, const std::vector<TrainingPair>& dev,
                                  const std::function<double(const TrainingPair&)>& f) {
  KeyedValues pred, gold;
  for (const auto& p : dev) {
    const auto key = p.segmentId + "#" + std::to_string(p.hypIndex);
    pred[key] = f(p);
    gold[key] = pairTarget(p, target);
  }
  return correlationRow(target, pred, gold);
}

inline void runBaselineCell(const ExperimentSpec& spec, const Dataset& trainSeg, const ExperimentInputs& in,
                            CellResult& cell) {
  const FeatureSet fs = spec.modelKind == "linreg_features" ? spec.model.features : FeatureSet::None;
  const auto train = expandHypotheses(trainSeg, static_cast<std::size_t>(cell.k), fs);
  const auto dev = expandHypotheses(in.dev, 1, fs);
  cell.trainPairs = train.size();
  cell.extra = nlohmann::json::object();
  for (const auto& target : cell.targets) {
    const auto tr = pairsWithTarget(train, target);
    const auto dv = pairsWithTarget(dev, target);
    if (tr.empty() || dv.empty()) throw InvalidArgument("no pairs carry target '" + target + "'");
    std::function<double(const TrainingPair&)> f;
    if (spec.modelKind == "linreg_tfidf") {
      auto res = tfidfMaxFeatureSearch(tr, dv, target);
      nlohmann::json grid = nlohmann::json::array();
      for (const auto& g : res.grid) {
        grid.push_back({{"max_features", g.maxFeatures},
                        {"retained", g.retained},
                        {"dev_pearson", g.devPearson ? nlohmann::json(*g.devPearson) : nlohmann::json(nullptr)}});
      }
      cell.extra[target] = {{"grid", grid}, {"chosen_max_features", res.tfidf.maxFeatures}};
      f = [tf = res.tfidf, lr = res.linreg](const TrainingPair& p) {
        return linPredict(lr, tfidfTransform(tf, {p.src, p.hyp}));
      };
    } else {
      auto lr = featureBaselineFit(tr, target);
      f = [lr](const TrainingPair& p) { return linPredict(lr, std::span<const double>(p.features)); };
    }
    cell.report.rows.push_back(baselineRow(target, dv, f));
    for (const auto& [name, data] : in.transfer) {
      auto tp = pairsWithTarget(expandHypotheses(data, 1, fs), target);
      auto it = std::find_if(cell.transfer.begin(), cell.transfer.end(),
                             [&](const TransferResult& t) { return t.dataset == name; });
      if (it == cell.transfer.end()) {
        cell.transfer.push_back({name, {}});
        it = std::prev(cell.transfer.end());
      }
      it->report.rows.push_back(baselineRow(target, tp, f));
    }
  }
}

inline std::vector<CiRow> aggregate(const std::vector<CellResult>& cells, const std::vector<FineTuneRow>& ft) {
  using Key = std::tuple<std::string, std::string, std::string, long, long>;
  std::map<Key, std::vector<double>> groups;
  std::map<Key, std::size_t> runs;
  for (const auto& c : cells) {
    if (c.status != "ok") continue;
    for (const auto& row : c.report.rows) {
      const Key key{"train", joinTargets(c.targets), row.target, c.size, c.k};
      ++runs[key];
      if (row.pearson) groups[key].push_back(*row.pearson);
    }
  }
  for (const auto& r : ft) {
    if (r.status != "ok") continue;
    const Key key{r.stage, r.pretrain, "", r.size, 0};
    ++runs[key];
    if (r.pearson) groups[key].push_back(*r.pearson);
  }
  std::vector<CiRow> out;
  for (const auto& [key, n] : runs) {
    CiRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), std::get<4>(key), n, {}, {}};
    const auto it = groups.find(key);
    if (it != groups.end() && !it->second.empty()) {
      double m = 0;
      for (double v : it->second) m += v;
      row.mean = m / static_cast<double>(it->second.size());
      if (it->second.size() >= 2) row.ci = meanCI(it->second);
    }
    out.push_back(row);
  }
  return out;
}

inline std::string cellId(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell%03zu", index);
  return buf;
}

}  // namespace detail

struct ExperimentOptions {
  std::ostream* log = nullptr;
};

// Executes the grid targets x train sizes x k x seeds. A failing cell is
// recorded with its message and the remaining cells still run.
inline ExperimentBundle runExperiment(const ExperimentSpec& spec, const ExperimentInputs& in,
                                      const ExperimentOptions& opt = {}) {
  spec.validate();
  if (in.train.empty() || in.dev.empty()) throw InvalidArgument("experiment: empty train or dev data");
  ExperimentBundle bundle;
  bundle.spec = toJson(spec);

  BpeModel bpe;
  if (spec.modelKind == "me") {
    std::vector<std::string> corpus;
    for (const auto& s : in.train) {
      corpus.push_back(s.src);
      for (const auto& h : s.hyps) corpus.push_back(h.text);
      if (s.ref) corpus.push_back(*s.ref);
    }
    bpe = bpeLearn(corpus, static_cast<std::size_t>(spec.model.vocabSize));
  }

  std::map<std::size_t, MeModel> pretrained;
  std::size_t index = 0;
  for (const auto& targets : spec.targetSets) {
    for (long size : spec.trainSizes) {
      for (long k : spec.ks) {
        for (std::uint64_t seed : spec.seeds) {
          CellResult cell;
          cell.id = detail::cellId(index);
          cell.targets = targets;
          cell.size = size;
          cell.k = k;
          cell.seed = seed;
          cell.report.metadata = {{"cell", cell.id}, {"targets", joinTargets(targets)}, {"seed", std::to_string(seed)},
                                  {"train_size", std::to_string(size)}, {"k", std::to_string(k)},
                                  {"model_kind", spec.modelKind}};
          if (opt.log) *opt.log << cell.id << " " << joinTargets(targets) << " n=" << size << " k=" << k
                                << " seed=" << seed << '\n';
          try {
            const Dataset sub = size > 0 ? subsample(in.train, static_cast<std::size_t>(size), seed) : in.train;
            if (spec.modelKind == "me") {
              auto cfg = spec.model;
              cfg.targets = targets;
              const auto tr = makeExamples(sub, static_cast<std::size_t>(k), cfg, bpe);
              const auto dv = makeExamples(in.dev, 1, cfg, bpe);
              cell.trainPairs = tr.size();
              auto tc = spec.train;
              tc.seed = seed;
              auto model = initModel(cfg, bpe, seed);
              train(model, tr, dv, tc);
              cell.history = model.history;
              cell.report.rows = modelReport(model, dv).rows;
              for (const auto& [name, data] : in.transfer) {
                auto r = modelReport(model, makeExamples(data, 1, cfg, bpe));
                r.metadata = cell.report.metadata;
                r.metadata["dataset"] = name;
                cell.transfer.push_back({name, r});
              }
              if (spec.finetune) pretrained.emplace(bundle.cells.size(), std::move(model));
            } else {
              detail::runBaselineCell(spec, sub, in, cell);
              for (auto& t : cell.transfer) {
                t.report.metadata = cell.report.metadata;
                t.report.metadata["dataset"] = t.dataset;
              }
            }
          } catch (const std::exception& e) {
            cell.status = std::string("failed: ") + e.what();
          }
          bundle.cells.push_back(std::move(cell));
          ++index;
        }
      }
    }
  }

  if (spec.finetune) {
    const auto& ft = *spec.finetune;
    const std::vector<std::string> ftTargets{ft.target};
    std::map<std::pair<long, std::uint64_t>, FineTuneRow> scratch;
    for (auto& [cellIndex, model] : pretrained) {
      const auto& cell = bundle.cells[cellIndex];
      const auto pre = joinTargets(cell.targets);
      FineTuneRow zero{cell.id, "zero_shot", pre, 0, cell.seed, 0, std::nullopt, "ok"};
      try {
        auto cfg = model.config;
        cfg.targets = ftTargets;
        const auto dv = makeExamples(in.finetuneDev, 1, cfg, model.bpe);
        const auto ev = evaluate(model, dv);
        std::vector<double> p, g;
        for (std::size_t i = 0; i < dv.size(); ++i) {
          if (!dv[i].targets[0]) continue;
          p.push_back(ev.predictions[i][0]);
          g.push_back(*dv[i].targets[0]);
        }
        zero.n = p.size();
        zero.pearson = safePearson(p, g);
      } catch (const std::exception& e) {
        zero.status = std::string("failed: ") + e.what();
      }
      bundle.finetune.push_back(zero);
      for (long size : ft.sizes) {
        FineTuneRow row{cell.id, "finetune", pre, size, cell.seed, 0, std::nullopt, "ok"};
        auto cfg = model.config;
        cfg.targets = ftTargets;
        try {
          const auto sub = subsample(in.finetuneTrain, static_cast<std::size_t>(size), cell.seed);
          const auto tr = makeExamples(sub, 1, cfg, model.bpe);
          const auto dv = makeExamples(in.finetuneDev, 1, cfg, model.bpe);
          auto tc = spec.train;
          tc.seed = cell.seed;
          MeModel tuned = model;
          tuned.history.clear();
          fineTune(tuned, ftTargets, tr, dv, tc);
          const auto ev = evaluate(tuned, dv);
          row.n = dv.size();
          row.pearson = ev.pearson.at(ft.target);
        } catch (const std::exception& e) {
          row.status = std::string("failed: ") + e.what();
        }
        bundle.finetune.push_back(row);
        const auto key = std::make_pair(size, cell.seed);
        if (ft.scratch && !scratch.count(key)) {
          FineTuneRow s{"", "scratch", "", size, cell.seed, 0, std::nullopt, "ok"};
          try {
            const auto sub = subsample(in.finetuneTrain, static_cast<std::size_t>(size), cell.seed);
            const auto tr = makeExamples(sub, 1, cfg, model.bpe);
            const auto dv = makeExamples(in.finetuneDev, 1, cfg, model.bpe);
            auto tc = spec.train;
            tc.seed = cell.seed;
            auto fresh = initModel(cfg, model.bpe, cell.seed);
            train(fresh, tr, dv, tc);
            s.n = dv.size();
            s.pearson = evaluate(fresh, dv).pearson.at(ft.target);
          } catch (const std::exception& e) {
            s.status = std::string("failed: ") + e.what();
          }
          scratch.emplace(key, s);
        }
      }
    }
    for (const auto& [key, row] : scratch) bundle.finetune.push_back(row);
  }
  bundle.ci = detail::aggregate(bundle.cells, bundle.finetune);
  return bundle;
}

namespace detail {

inline std::string optFixed(const std::optional<double>& v) { return v ? formatFixed(*v) : "nan"; }

inline void writeText(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace detail

inline std::string runsTsv(const ExperimentBundle& b) {
  std::ostringstream out;
  out << "cell\ttargets\ttarget\ttrain_size\tk\tseed\ttrain_pairs\tn\tpearson\tpearson_abs\tstatus\n";
  for (const auto& c : b.cells) {
    if (c.report.rows.empty()) {
      out << c.id << '\t' << joinTargets(c.targets) << "\t\t" << c.size << '\t' << c.k << '\t' << c.seed << '\t'
          << c.trainPairs << "\t0\tnan\tnan\t" << c.status << '\n';
    }
    for (const auto& r : c.report.rows) {
      out << c.id << '\t' << joinTargets(c.targets) << '\t' << r.target << '\t' << c.size << '\t' << c.k << '\t'
          << c.seed << '\t' << c.trainPairs << '\t' << r.n << '\t' << detail::optFixed(r.pearson) << '\t'
          << detail::optFixed(r.pearsonAbs()) << '\t' << (r.note.empty() ? c.status : r.note) << '\n';
    }
  }
  return out.str();
}

inline std::string ciTsv(const ExperimentBundle& b) {
  std::ostringstream out;
  out << "stage\ttargets\ttarget\ttrain_size\tk\truns\tmean\tci_lo\tci_hi\n";
  for (const auto& r : b.ci) {
    out << r.stage << '\t' << r.targets << '\t' << r.target << '\t' << r.size << '\t' << r.k << '\t' << r.runs << '\t'
        << detail::optFixed(r.mean) << '\t' << (r.ci ? formatFixed(r.ci->lo) : "nan") << '\t'
        << (r.ci ? formatFixed(r.ci->hi) : "nan") << '\n';
  }
  return out.str();
}

inline std::string transferTsv(const ExperimentBundle& b) {
  std::ostringstream out;
  out << "cell\tdataset\ttarget\tn\tpearson\tpearson_abs\n";
  for (const auto& c : b.cells) {
    for (const auto& t : c.transfer) {
      for (const auto& r : t.report.rows) {
        out << c.id << '\t' << t.dataset << '\t' << r.target << '\t' << r.n << '\t' << detail::optFixed(r.pearson)
            << '\t' << detail::optFixed(r.pearsonAbs()) << '\n';
      }
    }
  }
  return out.str();
}

inline std::string finetuneTsv(const ExperimentBundle& b) {
  std::ostringstream out;
  out << "cell\tstage\tpretrain\tsize\tseed\tn\tpearson\tstatus\n";
  for (const auto& r : b.finetune) {
    out << (r.cellId.empty() ? "-" : r.cellId) << '\t' << r.stage << '\t' << (r.pretrain.empty() ? "-" : r.pretrain)
        << '\t' << r.size << '\t' << r.seed << '\t' << r.n << '\t' << detail::optFixed(r.pearson) << '\t' << r.status
        << '\n';
  }
  return out.str();
}

// Writes manifest.json, the TSV tables, and per-cell report and history JSON.
inline void writeBundle(const ExperimentBundle& b, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root / "reports");
  fs::create_directories(root / "histories");
  std::vector<std::string> files{"runs.tsv", "ci.tsv"};
  detail::writeText(root / "runs.tsv", runsTsv(b));
  detail::writeText(root / "ci.tsv", ciTsv(b));
  bool anyTransfer = false;
  for (const auto& c : b.cells) anyTransfer = anyTransfer || !c.transfer.empty();
  if (anyTransfer) {
    detail::writeText(root / "transfer.tsv", transferTsv(b));
    files.push_back("transfer.tsv");
  }
  if (!b.finetune.empty()) {
    detail::writeText(root / "finetune.tsv", finetuneTsv(b));
    files.push_back("finetune.tsv");
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : b.cells) {
    nlohmann::json report = toJson(c.report);
    if (!c.transfer.empty()) {
      nlohmann::json tr = nlohmann::json::object();
      for (const auto& t : c.transfer) tr[t.dataset] = toJson(t.report);
      report["transfer"] = tr;
    }
    if (!c.extra.is_null()) report["baseline"] = c.extra;
    const auto reportFile = "reports/" + c.id + ".json";
    detail::writeText(root / reportFile, report.dump(2) + "\n");
    files.push_back(reportFile);
    nlohmann::json entry{{"id", c.id},     {"targets", c.targets},        {"train_size", c.size},
                         {"k", c.k},       {"seed", c.seed},              {"status", c.status},
                         {"train_pairs", c.trainPairs}, {"report", reportFile}};
    if (!c.history.empty()) {
      const auto historyFile = "histories/" + c.id + ".json";
      detail::writeText(root / historyFile, historyToJson(c.history).dump(2) + "\n");
      files.push_back(historyFile);
      entry["history"] = historyFile;
    }
    cells.push_back(entry);
  }
  std::size_t failed = 0;
  for (const auto& c : b.cells) failed += c.status != "ok";
  for (const auto& r : b.finetune) failed += r.status != "ok";
  const nlohmann::json manifest{{"spec", b.spec}, {"cells", cells}, {"failed_runs", failed}, {"files", files}};
  detail::writeText(root / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace mtme
