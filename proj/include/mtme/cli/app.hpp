#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtme/baselines/confidence.hpp"
#include "mtme/data/dataset_ops.hpp"
#include "mtme/data/jsonl.hpp"
#include "mtme/data/synthetic.hpp"
#include "mtme/model/checkpoint.hpp"
#include "mtme/model/train.hpp"
#include "mtme/pipeline/experiment.hpp"
#include "mtme/stats/report.hpp"

namespace mtme::cli {

// Flag values that are well-formed for the parser but unusable; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
};

struct Options {
  std::string metric = "all";
  std::string metrics;
  std::string hyp, ref, data, dev, src, nbest, refFile, model, spec, target, features, inputMode;
  long devCount = 0;
  long k = 1;
  long vocab = 0;
  long bins = 20;
  long epochs = 0, batch = 0, patience = 0, embed = 0, hidden = 0, layers = 0, headHidden = 0;
  double lr = 0;
  long segments = 1000, hyps = 5, words = 300;
  double noise = 0.02;
  double logRegLr = 0.1;
  long logRegEpochs = 1000;
};

namespace detail {

inline std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline void emit(const Globals& g, const std::string& file, const std::string& content, std::ostream& out) {
  if (g.out.empty()) {
    out << content;
    return;
  }
  std::filesystem::create_directories(g.out);
  const auto path = std::filesystem::path(g.out) / file;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
}

inline std::string jsonl(const Dataset& d) {
  std::ostringstream s;
  writeJsonl(d, s);
  return s.str();
}

inline nlohmann::json readConfig(const Globals& g) {
  if (g.config.empty()) return nlohmann::json::object();
  std::ifstream in(g.config);
  try {
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw UsageError("config '" + g.config + "' must hold a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + g.config + "': " + e.what());
  }
}

inline void requireOut(const Globals& g, const char* command) {
  if (g.out.empty()) throw UsageError(std::string(command) + " needs --out <dir>");
}

inline void checkMetricList(const std::vector<std::string>& ms) {
  for (const auto& m : ms) {
    if (!isComputableMetric(m)) throw UsageError("cannot compute metric '" + m + "'");
  }
}

inline void checkTargets(const std::vector<std::string>& ts) {
  if (ts.empty()) throw UsageError("--target must name at least one target");
  for (const auto& t : ts) {
    if (!isTargetId(t)) throw UsageError("unknown target '" + t + "'");
  }
}

// Fills computable target columns that some hypotheses lack, when every
// segment has a reference.
inline void fillMetricColumns(Dataset& d, const std::vector<std::string>& targets) {
  std::vector<std::string> need;
  for (const auto& t : targets) {
    if (!isComputableMetric(t)) continue;
    bool missing = false;
    for (const auto& s : d) {
      for (const auto& h : s.hyps) missing = missing || !h.scores.count(t);
    }
    if (missing) need.push_back(t);
  }
  if (need.empty()) return;
  for (const auto& s : d) {
    if (!s.ref) return;
  }
  computeMetricColumns(d, need);
}

inline MeModelConfig modelConfig(const nlohmann::json& cfg, const Options& o) {
  MeModelConfig c = cfg.contains("model") ? modelConfigFromJson(cfg["model"]) : MeModelConfig{};
  if (o.vocab > 0) c.vocabSize = o.vocab;
  if (o.embed > 0) c.embedDim = o.embed;
  if (o.hidden > 0) c.hiddenDim = o.hidden;
  if (o.layers > 0) c.layers = o.layers;
  if (o.headHidden > 0) c.headHidden = o.headHidden;
  if (!o.features.empty()) c.features = parseFeatureSet(o.features);
  if (!o.inputMode.empty()) c.inputMode = parseInputMode(o.inputMode);
  if (!o.target.empty()) c.targets = splitList(o.target);
  return c;
}

inline TrainConfig trainConfig(const nlohmann::json& cfg, const Options& o, std::uint64_t seed) {
  TrainConfig t = cfg.contains("train") ? trainConfigFromJson(cfg["train"]) : TrainConfig{};
  if (o.lr > 0) t.learningRate = o.lr;
  if (o.epochs > 0) t.maxEpochs = o.epochs;
  if (o.batch > 0) t.batchSize = o.batch;
  if (o.patience > 0) t.earlyStopPatience = o.patience;
  t.seed = seed;
  return t;
}

inline std::string historyTsv(const std::vector<EpochRecord>& h, const std::vector<std::string>& targets) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\tdev_loss";
  for (const auto& t : targets) out << "\tdev_pearson_" << t;
  out << '\n';
  for (const auto& e : h) {
    out << e.epoch << '\t' << formatFixed(e.trainLoss) << '\t' << formatFixed(e.devLoss);
    for (const auto& t : targets) {
      auto it = e.devPearson.find(t);
      out << '\t' << (it != e.devPearson.end() && it->second ? formatFixed(*it->second) : "nan");
    }
    out << '\n';
  }
  return out.str();
}

struct Splits {
  Dataset train;
  Dataset dev;
};

inline Splits trainDevSplit(Dataset data, const std::string& devPath, long devCount, double fraction,
                            std::uint64_t seed) {
  if (!devPath.empty()) return {std::move(data), loadJsonl(devPath)};
  std::size_t n = devCount > 0 ? static_cast<std::size_t>(devCount)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(data.size())));
  auto sp = splitDataset(data, n, seed);
  return {std::move(sp.train), std::move(sp.dev)};
}

inline void writeTrainingOutputs(const Globals& g, const MeModel& m, const CorrelationReport& report,
                                 const TrainReport& tr, std::ostream& out) {
  std::filesystem::create_directories(g.out);
  saveCheckpoint(m, (std::filesystem::path(g.out) / "model.json").string());
  emit(g, "history.tsv", historyTsv(m.history, m.config.targets), out);
  emit(g, "report.tsv", toTsv(report), out);
  emit(g, "report.json", toJson(report).dump(2) + "\n", out);
  out << "best_epoch\t" << tr.bestEpoch << "\nepochs_run\t" << tr.epochsRun << "\nbest_dev_loss\t"
      << formatFixed(tr.bestDevLoss) << '\n';
  for (const auto& row : report.rows) {
    out << "dev_pearson_" << row.target << '\t' << (row.pearson ? formatFixed(*row.pearson) : "nan") << '\n';
  }
}

inline std::string featureHeader(FeatureSet fs) {
  std::string h = "segment_id\thyp_index";
  for (const auto& n : featureNames(fs)) h += "\t" + std::string(n);
  return h + "\n";
}

}  // namespace detail

inline int runCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metric and quality estimation for machine translation", "mtme"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Options o;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--config", g.config, "JSON file with \"model\" and \"train\" defaults")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");

  const std::vector<std::string> metricChoices{"sentbleu", "chrf", "ter", "meteor", "all"};
  const auto existing = [](CLI::App* sub, const char* name, std::string& v, const char* help, bool required) {
    auto* opt = sub->add_option(name, v, help)->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  const auto trainFlags = [&](CLI::App* sub) {
    sub->add_option("--epochs", o.epochs, "Maximum epochs");
    sub->add_option("--lr", o.lr, "Learning rate");
    sub->add_option("--batch", o.batch, "Batch size");
    sub->add_option("--patience", o.patience, "Early-stopping patience in epochs");
    sub->add_option("--dev-count", o.devCount, "Dev segments split off --data when --dev is absent");
    sub->add_option("--k", o.k, "Training hypotheses per segment")->check(CLI::PositiveNumber);
    sub->add_option("--target", o.target, "Comma-separated targets");
  };

  auto* score = app.add_subcommand("score", "Metric values for a hypothesis/reference pair or a JSONL dataset");
  score->add_option("--metric", o.metric, "Metric or 'all'")->check(CLI::IsMember(metricChoices));
  score->add_option("--hyp", o.hyp, "Hypothesis text");
  score->add_option("--ref", o.ref, "Reference text");
  existing(score, "--data", o.data, "JSONL dataset", false);

  auto* ingest = app.add_subcommand("ingest", "Build a JSONL dataset from sources and an n-best TSV");
  existing(ingest, "--src", o.src, "Source sentences, one per line", true);
  existing(ingest, "--nbest", o.nbest, "n-best TSV", true);
  existing(ingest, "--ref", o.refFile, "References, one per line", false);
  ingest->add_option("--metrics", o.metrics, "Comma-separated metric columns to compute");

  auto* bpeTrain = app.add_subcommand("bpe-train", "Learn a BPE vocabulary from a dataset");
  existing(bpeTrain, "--data", o.data, "JSONL dataset", true);
  bpeTrain->add_option("--vocab", o.vocab, "Vocabulary size")->check(CLI::Range(4L, 1L << 24));

  auto* featurize = app.add_subcommand("featurize", "Glass-box feature vectors as TSV");
  existing(featurize, "--data", o.data, "JSONL dataset", true);
  featurize->add_option("--features", o.features, "default6 or extended9")
      ->check(CLI::IsMember({"default6", "extended9"}));
  featurize->add_option("--k", o.k, "Hypotheses per segment (0 for all)")->check(CLI::NonNegativeNumber);

  auto* trainCmd = app.add_subcommand("train", "Train a metric estimation model");
  existing(trainCmd, "--data", o.data, "Training JSONL", true);
  existing(trainCmd, "--dev", o.dev, "Dev JSONL", false);
  trainFlags(trainCmd);
  trainCmd->add_option("--features", o.features, "none, default6 or extended9")
      ->check(CLI::IsMember({"none", "default6", "extended9"}));
  trainCmd->add_option("--input-mode", o.inputMode, "src+hyp, hyp, hyp+ref or src+hyp+ref")
      ->check(CLI::IsMember({"src+hyp", "hyp", "hyp+ref", "src+hyp+ref"}));
  trainCmd->add_option("--vocab", o.vocab, "BPE vocabulary size")->check(CLI::PositiveNumber);
  trainCmd->add_option("--embed", o.embed, "Embedding width")->check(CLI::PositiveNumber);
  trainCmd->add_option("--hidden", o.hidden, "LSTM hidden width")->check(CLI::PositiveNumber);
  trainCmd->add_option("--layers", o.layers, "BiLSTM layers")->check(CLI::PositiveNumber);
  trainCmd->add_option("--head-hidden", o.headHidden, "Head hidden width")->check(CLI::PositiveNumber);

  auto* finetune = app.add_subcommand("finetune", "Fine-tune a checkpoint on new targets");
  existing(finetune, "--model", o.model, "Checkpoint JSON", true);
  existing(finetune, "--data", o.data, "Training JSONL", true);
  existing(finetune, "--dev", o.dev, "Dev JSONL", false);
  trainFlags(finetune);

  auto* predictCmd = app.add_subcommand("predict", "Predictions for every hypothesis as TSV");
  existing(predictCmd, "--model", o.model, "Checkpoint JSON", true);
  existing(predictCmd, "--data", o.data, "JSONL dataset", true);

  auto* evaluateCmd = app.add_subcommand("evaluate", "Correlation report of a checkpoint on a dataset");
  existing(evaluateCmd, "--model", o.model, "Checkpoint JSON", true);
  existing(evaluateCmd, "--data", o.data, "JSONL dataset", true);
  evaluateCmd->add_option("--k", o.k, "Hypotheses per segment")->check(CLI::PositiveNumber);

  auto* expand = app.add_subcommand("expand", "Flatten the top-k hypotheses into training pairs");
  existing(expand, "--data", o.data, "JSONL dataset", true);
  expand->add_option("--k", o.k, "Hypotheses per segment")->required()->check(CLI::PositiveNumber);
  expand->add_option("--features", o.features, "none, default6 or extended9")
      ->check(CLI::IsMember({"none", "default6", "extended9"}));

  auto* ablate = app.add_subcommand("ablate", "Run an experiment grid from a JSON spec");
  existing(ablate, "--spec", o.spec, "Experiment spec JSON", true);

  auto* confidence = app.add_subcommand("confidence", "Train and evaluate the confidence classifier");
  existing(confidence, "--model", o.model, "Checkpoint JSON", true);
  existing(confidence, "--data", o.data, "JSONL dataset", true);
  confidence->add_option("--metric", o.metric, "Gold metric column")->check(CLI::IsMember(metricChoices));
  confidence->add_option("--dev-count", o.devCount, "Held-out segments");
  confidence->add_option("--lr", o.logRegLr, "Learning rate")->check(CLI::PositiveNumber);
  confidence->add_option("--epochs", o.logRegEpochs, "Full-batch epochs")->check(CLI::PositiveNumber);

  auto* dist = app.add_subcommand("dist", "Histogram of score columns as TSV");
  existing(dist, "--data", o.data, "JSONL dataset", true);
  dist->add_option("--metrics", o.metrics, "Comma-separated columns (default: all present)");
  dist->add_option("--bins", o.bins, "Number of bins")->check(CLI::Range(1L, 10000L));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--segments", o.segments, "Segments")->check(CLI::PositiveNumber);
  synth->add_option("--hyps", o.hyps, "Hypotheses per segment")->check(CLI::PositiveNumber);
  synth->add_option("--vocabulary", o.words, "Words per language")->check(CLI::Range(2L, 1L << 20));
  synth->add_option("--noise", o.noise, "Uniform target noise half-width")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--metrics", o.metrics, "Comma-separated metric columns to compute");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e, out, err);
    }
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    const auto cfg = detail::readConfig(g);
    if (score->parsed()) {
      const bool text = score->count("--hyp") || score->count("--ref");
      if (text == !o.data.empty()) throw UsageError("score needs either --hyp and --ref, or --data");
      const auto metrics = o.metric == "all" ? computableMetrics() : std::vector<std::string>{o.metric};
      if (text) {
        if (!score->count("--hyp") || !score->count("--ref")) throw UsageError("score needs both --hyp and --ref");
        if (metrics.size() == 1) {
          out << formatFixed(scoreOne(metrics[0], o.hyp, o.ref).value) << '\n';
        } else {
          for (const auto& m : metrics) out << m << '\t' << formatFixed(scoreOne(m, o.hyp, o.ref).value) << '\n';
        }
        return 0;
      }
      auto d = loadJsonl(o.data);
      computeMetricColumns(d, metrics);
      detail::emit(g, "scored.jsonl", detail::jsonl(d), out);
      return 0;
    }
    if (ingest->parsed()) {
      const auto metrics = detail::splitList(o.metrics);
      detail::checkMetricList(metrics);
      if (!metrics.empty() && o.refFile.empty()) throw UsageError("--metrics needs --ref");
      auto d = ingestNbest(o.src, o.nbest, o.refFile);
      if (!metrics.empty()) computeMetricColumns(d, metrics);
      detail::emit(g, "dataset.jsonl", detail::jsonl(d), out);
      return 0;
    }
    if (bpeTrain->parsed()) {
      const auto d = loadJsonl(o.data);
      std::vector<std::string> corpus;
      for (const auto& s : d) {
        corpus.push_back(s.src);
        for (const auto& h : s.hyps) corpus.push_back(h.text);
        if (s.ref) corpus.push_back(*s.ref);
      }
      const auto bpe = bpeLearn(corpus, static_cast<std::size_t>(o.vocab > 0 ? o.vocab : 8192));
      detail::emit(g, "bpe.json", toJson(bpe).dump() + "\n", out);
      return 0;
    }
    if (featurize->parsed()) {
      const FeatureSet fs = o.features.empty() ? FeatureSet::Extended9 : parseFeatureSet(o.features);
      const auto d = loadJsonl(o.data);
      std::string tsv = detail::featureHeader(fs);
      for (const auto& s : d) {
        const auto feats = buildFeatureVectors(s, fs);
        const std::size_t n = o.k > 0 ? std::min<std::size_t>(static_cast<std::size_t>(o.k), feats.size()) : feats.size();
        for (std::size_t i = 0; i < n; ++i) {
          tsv += s.id + "\t" + std::to_string(i);
          for (double v : feats[i]) tsv += "\t" + formatFixed(v);
          tsv += "\n";
        }
      }
      detail::emit(g, "features.tsv", tsv, out);
      return 0;
    }
    if (trainCmd->parsed()) {
      detail::requireOut(g, "train");
      auto mc = detail::modelConfig(cfg, o);
      detail::checkTargets(mc.targets);
      auto tc = detail::trainConfig(cfg, o, g.seed);
      try {
        mc.validate();
        tc.validate();
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      auto data = loadJsonl(o.data);
      auto sp = detail::trainDevSplit(std::move(data), o.dev, o.devCount, tc.devFraction, g.seed);
      for (auto* d : {&sp.train, &sp.dev}) {
        deriveHumanZ(*d);
        detail::fillMetricColumns(*d, mc.targets);
      }
      std::vector<std::string> corpus;
      for (const auto& s : sp.train) {
        corpus.push_back(s.src);
        for (const auto& h : s.hyps) corpus.push_back(h.text);
        if (s.ref) corpus.push_back(*s.ref);
      }
      auto bpe = bpeLearn(corpus, static_cast<std::size_t>(mc.vocabSize));
      const auto tr = makeExamples(sp.train, static_cast<std::size_t>(o.k), mc, bpe);
      const auto dv = makeExamples(sp.dev, 1, mc, bpe);
      auto model = initModel(mc, std::move(bpe), g.seed);
      const auto rep = train(model, tr, dv, tc);
      auto report = modelReport(model, dv);
      report.metadata = {{"dataset", o.data}, {"seed", std::to_string(g.seed)}, {"model_kind", mc.modelKind()}};
      detail::writeTrainingOutputs(g, model, report, rep, out);
      return 0;
    }
    if (finetune->parsed()) {
      detail::requireOut(g, "finetune");
      auto tc = detail::trainConfig(cfg, o, g.seed);
      try {
        tc.validate();
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      auto model = loadCheckpoint(o.model);
      const auto targets = o.target.empty() ? model.config.targets : detail::splitList(o.target);
      detail::checkTargets(targets);
      auto data = loadJsonl(o.data);
      auto sp = detail::trainDevSplit(std::move(data), o.dev, o.devCount, tc.devFraction, g.seed);
      auto cfgNew = model.config;
      cfgNew.targets = targets;
      for (auto* d : {&sp.train, &sp.dev}) {
        deriveHumanZ(*d);
        detail::fillMetricColumns(*d, targets);
      }
      const auto tr = makeExamples(sp.train, static_cast<std::size_t>(o.k), cfgNew, model.bpe);
      const auto dv = makeExamples(sp.dev, 1, cfgNew, model.bpe);
      model.history.clear();
      const auto rep = fineTune(model, targets, tr, dv, tc);
      auto report = modelReport(model, dv);
      report.metadata = {{"dataset", o.data}, {"checkpoint", o.model}, {"seed", std::to_string(g.seed)}};
      detail::writeTrainingOutputs(g, model, report, rep, out);
      return 0;
    }
    if (predictCmd->parsed()) {
      const auto model = loadCheckpoint(o.model);
      const auto d = loadJsonl(o.data);
      std::string tsv = "segment_id\thyp_index";
      for (const auto& t : model.config.targets) tsv += "\t" + t;
      tsv += "\terror\n";
      for (const auto& row : predict(model, d)) {
        tsv += row.segmentId + "\t" + (row.hypIndex < 0 ? std::string("-") : std::to_string(row.hypIndex));
        for (std::size_t t = 0; t < model.config.targets.size(); ++t) {
          tsv += "\t" + (row.error.empty() ? formatFixed(row.values[t]) : std::string("nan"));
        }
        tsv += "\t" + (row.error.empty() ? std::string("-") : row.error) + "\n";
      }
      detail::emit(g, "predictions.tsv", tsv, out);
      return 0;
    }
    if (evaluateCmd->parsed()) {
      const auto model = loadCheckpoint(o.model);
      auto d = loadJsonl(o.data);
      deriveHumanZ(d);
      detail::fillMetricColumns(d, model.config.targets);
      const auto exs = makeExamples(d, static_cast<std::size_t>(o.k), model.config, model.bpe);
      auto report = modelReport(model, exs);
      report.metadata = {{"dataset", o.data}, {"checkpoint", o.model}, {"seed", std::to_string(g.seed)}};
      if (g.out.empty()) {
        out << toTsv(report);
      } else {
        detail::emit(g, "report.tsv", toTsv(report), out);
        detail::emit(g, "report.json", toJson(report).dump(2) + "\n", out);
        out << toTsv(report);
      }
      return 0;
    }
    if (expand->parsed()) {
      const FeatureSet fs = o.features.empty() ? FeatureSet::Extended9 : parseFeatureSet(o.features);
      auto d = loadJsonl(o.data);
      deriveHumanZ(d);
      std::string text;
      for (const auto& p : expandHypotheses(d, static_cast<std::size_t>(o.k), fs)) {
        nlohmann::json j{{"segment_id", p.segmentId}, {"hyp_index", p.hypIndex}, {"src", p.src},
                         {"hyp", p.hyp},             {"scores", p.scores},       {"features", p.features}};
        if (p.ref) j["ref"] = *p.ref;
        if (p.humanZ) j["human_z"] = *p.humanZ;
        text += j.dump() + "\n";
      }
      detail::emit(g, "pairs.jsonl", text, out);
      return 0;
    }
    if (ablate->parsed()) {
      detail::requireOut(g, "ablate");
      std::ifstream in(o.spec);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("spec '" + o.spec + "': " + e.what());
      }
      if (j.is_object() && !j.contains("seeds")) j["seeds"] = {g.seed};
      ExperimentSpec spec;
      try {
        spec = experimentSpecFromJson(j, std::filesystem::path(o.spec).parent_path().string());
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      for (const auto& p : std::vector<std::string>{spec.trainData, spec.devData}) {
        if (!p.empty() && !std::filesystem::exists(p)) throw UsageError("data file '" + p + "' does not exist");
      }
      const auto inputs = loadExperimentInputs(spec);
      const auto bundle = runExperiment(spec, inputs, {&err});
      writeBundle(bundle, g.out);
      out << ciTsv(bundle);
      return 0;
    }
    if (confidence->parsed()) {
      const std::string metric = o.metric == "all" ? "sentbleu" : o.metric;
      const auto model = loadCheckpoint(o.model);
      auto d = loadJsonl(o.data);
      detail::fillMetricColumns(d, {metric});
      auto cfgGold = model.config;
      cfgGold.targets = {metric};
      const auto sp = detail::trainDevSplit(std::move(d), "", o.devCount, 0.2, g.seed);
      const auto labelled = [&](const Dataset& part, std::vector<std::vector<double>>& lambda,
                                std::vector<int>& labels) {
        const auto xs = makeExamples(part, 1, model.config, model.bpe);
        const auto gold = makeExamples(part, 1, cfgGold, model.bpe);
        const auto pred = evaluate(model, xs).predictions;
        const auto hidden = penultimate(model, xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (!gold[i].targets[0]) continue;
          lambda.push_back(hidden[i]);
          labels.push_back(confidenceLabel(pred[i][0], *gold[i].targets[0]));
        }
      };
      std::vector<std::vector<double>> xTrain, xTest;
      std::vector<int> yTrain, yTest;
      labelled(sp.train, xTrain, yTrain);
      labelled(sp.dev, xTest, yTest);
      const auto clf = logRegFit(xTrain, yTrain, o.logRegLr, static_cast<int>(o.logRegEpochs));
      const auto acc = logRegAccuracy(clf, xTest, yTest);
      out << "accuracy\t" << formatFixed(acc.accuracy) << "\nmajority_baseline\t" << formatFixed(acc.majorityBaseline)
          << "\ntest_examples\t" << yTest.size() << '\n';
      if (!g.out.empty()) {
        const nlohmann::json j{{"metric", metric},
                               {"accuracy", acc.accuracy},
                               {"majority_baseline", acc.majorityBaseline},
                               {"train_examples", yTrain.size()},
                               {"test_examples", yTest.size()},
                               {"classifier", toJson(clf)}};
        detail::emit(g, "confidence.json", j.dump(2) + "\n", out);
      }
      return 0;
    }
    if (dist->parsed()) {
      auto d = loadJsonl(o.data);
      deriveHumanZ(d);
      std::map<std::string, std::vector<double>> cols;
      for (const auto& s : d) {
        for (const auto& h : s.hyps) {
          for (const auto& [m, v] : h.scores) cols[m].push_back(v);
          if (h.humanZ) cols["human"].push_back(*h.humanZ);
        }
      }
      auto wanted = detail::splitList(o.metrics);
      if (wanted.empty()) {
        for (const auto& [m, v] : cols) wanted.push_back(m);
      }
      std::string tsv = "metric\tbin\tlo\thi\tcount\n";
      for (const auto& m : wanted) {
        auto it = cols.find(m);
        if (it == cols.end()) throw InvalidArgument("no values for column '" + m + "'");
        const auto& v = it->second;
        double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
        if (m == "sentbleu" || m == "chrf" || m == "meteor") {
          lo = 0.0;
          hi = std::max(1.0, hi);
        }
        if (hi <= lo) hi = lo + 1.0;
        std::vector<long> counts(static_cast<std::size_t>(o.bins), 0);
        for (double x : v) {
          auto b = static_cast<long>((x - lo) / (hi - lo) * static_cast<double>(o.bins));
          ++counts[static_cast<std::size_t>(std::clamp(b, 0L, o.bins - 1))];
        }
        for (long b = 0; b < o.bins; ++b) {
          const double w = (hi - lo) / static_cast<double>(o.bins);
          tsv += m + "\t" + std::to_string(b) + "\t" + formatFixed(lo + w * static_cast<double>(b)) + "\t" +
                 formatFixed(lo + w * static_cast<double>(b + 1)) + "\t" +
                 std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
        }
      }
      detail::emit(g, "dist.tsv", tsv, out);
      return 0;
    }
    if (synth->parsed()) {
      const auto metrics = detail::splitList(o.metrics);
      detail::checkMetricList(metrics);
      SyntheticOptions so;
      so.segments = static_cast<std::size_t>(o.segments);
      so.hypsPerSegment = static_cast<std::size_t>(o.hyps);
      so.vocabulary = static_cast<std::size_t>(o.words);
      so.noise = o.noise;
      so.seed = g.seed;
      auto d = generateSynthetic(so);
      if (!metrics.empty()) computeMetricColumns(d, metrics);
      detail::emit(g, "synthetic.jsonl", detail::jsonl(d), out);
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mtme::cli
