#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mtme/cli/app.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = mtme::cli::runCommand(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long lineCount(const std::string& s) { return static_cast<long>(std::count(s.begin(), s.end(), '\n')); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::path(::testing::TempDir()) / ("mtme_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  std::string corpus(std::uint64_t seed = 1) {
    const auto r = run({"--seed", std::to_string(seed), "--out", path("syn"), "synth", "--segments", "40", "--hyps",
                        "3", "--vocabulary", "50", "--metrics", "sentbleu,chrf"});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("syn/synthetic.jsonl");
  }

  std::vector<std::string> tinyTrain(const std::string& data, const std::string& out) const {
    return {"--out", out, "train", "--data", data, "--dev-count", "8", "--target", "sentbleu,human", "--vocab", "80",
            "--embed", "4", "--hidden", "4", "--head-hidden", "6", "--epochs", "2", "--lr", "0.003"};
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, GoldenSentBleu) {
  const auto r =
      run({"score", "--metric", "sentbleu", "--hyp", "IT hat nicht funktioniert.", "--ref", "Das hat nicht funktioniert."});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.668740\n");
  EXPECT_TRUE(r.err.empty());
}

TEST_F(Cli, ScoreAllListsEveryMetric) {
  const auto r = run({"score", "--hyp", "a b c d", "--ref", "a b c d"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 17), "sentbleu\t1.000000");
  EXPECT_NE(r.out.find("ter\t0.000000"), std::string::npos);
  EXPECT_NE(r.out.find("chrf\t1.000000"), std::string::npos);
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("score"), std::string::npos);
}

TEST_F(Cli, UnknownMetricIsUsageError) {
  const auto r = run({"score", "--metric", "nosuch", "--hyp", "a", "--ref", "b"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nosuch"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, MissingFileNamesPath) {
  const auto r = run({"train", "--data", "missing.jsonl", "--out", path("o")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing.jsonl"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nosuch"}).code, 2);
  EXPECT_EQ(run({"score", "--hyp", "a"}).code, 2);
  const auto data = corpus();
  EXPECT_EQ(run({"score", "--hyp", "a", "--ref", "b", "--data", data}).code, 2);
  EXPECT_EQ(run({"train", "--data", data}).code, 2);
  EXPECT_EQ(run({"--out", path("o"), "train", "--data", data, "--target", "bogus"}).code, 2);
  EXPECT_EQ(run({"--out", path("o"), "train", "--data", data, "--features", "seven"}).code, 2);
  EXPECT_EQ(run({"expand", "--data", data}).code, 2);
  EXPECT_EQ(run({"synth", "--metrics", "bleu4"}).code, 2);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  std::ofstream(path("bad.jsonl")) << "{\"id\": 3}\n";
  const auto r = run({"score", "--data", path("bad.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
  std::ofstream(path("nb.tsv")) << "0\t0\tx\t\tHello.\n";
  std::ofstream(path("src.txt")) << "Hallo.\n";
  EXPECT_EQ(run({"ingest", "--src", path("src.txt"), "--nbest", path("nb.tsv")}).code, 1);
}

TEST_F(Cli, ScoreDataAddsColumns) {
  const auto data = corpus();
  const auto r = run({"score", "--metric", "ter", "--data", data});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto scored = mtme::parseJsonl(in);
  ASSERT_EQ(scored.size(), 40u);
  for (const auto& s : scored) {
    for (const auto& h : s.hyps) {
      EXPECT_TRUE(h.scores.count("ter"));
      EXPECT_TRUE(h.scores.count("chrf"));
    }
  }
}

TEST_F(Cli, IngestWithMetrics) {
  std::ofstream(path("src.txt")) << "Das ist gut.\nHallo Welt.\n";
  std::ofstream(path("ref.txt")) << "This is good.\nHello world.\n";
  std::ofstream(path("nb.tsv")) << "0\t0\t-1.5\t-0.5,-1.0\tThis is good.\n0\t1\t-2.0\t\tThat is good.\n1\t0\t-0.7\t\tHello world.\n";
  const auto r = run({"ingest", "--src", path("src.txt"), "--nbest", path("nb.tsv"), "--ref", path("ref.txt"),
                      "--metrics", "sentbleu,ter"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto d = mtme::parseJsonl(in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].hyps.size(), 2u);
  EXPECT_DOUBLE_EQ(d[0].hyps[0].scores.at("sentbleu"), 1.0);
  EXPECT_DOUBLE_EQ(d[0].hyps[1].scores.at("ter"), 0.25);
  EXPECT_EQ(run({"ingest", "--src", path("src.txt"), "--nbest", path("nb.tsv"), "--metrics", "ter"}).code, 2);
}

TEST_F(Cli, SynthIsSeedDeterministic) {
  const auto a = run({"--seed", "5", "synth", "--segments", "10"});
  const auto b = run({"--seed", "5", "synth", "--segments", "10"});
  const auto c = run({"--seed", "6", "synth", "--segments", "10"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST_F(Cli, FeaturizeAndExpand) {
  const auto data = corpus();
  const auto f = run({"featurize", "--data", data, "--features", "default6", "--k", "2"});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(lineCount(f.out), 1 + 40 * 2);
  EXPECT_EQ(f.out.substr(0, f.out.find('\n')), "segment_id\thyp_index\tlogprob\tprob\tsrc_len\thyp_len\tlen_ratio\thyp_var_h1");
  const auto e = run({"expand", "--data", data, "--k", "3"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(lineCount(e.out), 40 * 3);
  const auto first = nlohmann::json::parse(e.out.substr(0, e.out.find('\n')));
  EXPECT_EQ(first["features"].size(), 9u);
  EXPECT_TRUE(first.contains("human_z"));
}

TEST_F(Cli, BpeTrainWritesModel) {
  const auto data = corpus();
  const auto r = run({"--out", path("bpe"), "bpe-train", "--data", data, "--vocab", "60"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bpe = mtme::bpeFromJson(nlohmann::json::parse(slurp(path("bpe/bpe.json"))));
  EXPECT_LE(bpe.symbols.size(), 60u);
}

TEST_F(Cli, DistHistogramCountsEveryValue) {
  const auto data = corpus();
  const auto r = run({"dist", "--data", data, "--metrics", "sentbleu,human", "--bins", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "metric\tbin\tlo\thi\tcount");
  std::map<std::string, long> total;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto f = mtme::detail::splitTabs(line);
    ASSERT_EQ(f.size(), 5u);
    total[f[0]] += std::stol(f[4]);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(total["sentbleu"], 120);
  EXPECT_EQ(total["human"], 120);
  EXPECT_NE(r.out.find("sentbleu\t0\t0.000000\t0.200000"), std::string::npos);
  EXPECT_EQ(run({"dist", "--data", data, "--metrics", "meteor"}).code, 1);
}

TEST_F(Cli, TrainEvaluatePredictRoundTrip) {
  const auto data = corpus();
  auto r = run(tinyTrain(data, path("m")));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model.json", "history.tsv", "report.tsv", "report.json"}) EXPECT_TRUE(fs::exists(path("m/") + f)) << f;
  EXPECT_EQ(lineCount(slurp(path("m/history.tsv"))), 3);
  const auto rep = nlohmann::json::parse(slurp(path("m/report.json")));
  EXPECT_EQ(rep["metadata"]["model_kind"], "me_all");

  const auto ev = run({"evaluate", "--model", path("m/model.json"), "--data", data});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.out.substr(0, ev.out.find('\n')), "target\tn\tpearson\tpearson_abs");
  EXPECT_NE(ev.out.find("\nsentbleu\t40\t"), std::string::npos);
  EXPECT_NE(ev.out.find("\nhuman\t40\t"), std::string::npos);
  const auto ev2 = run({"--out", path("ev"), "evaluate", "--model", path("m/model.json"), "--data", data, "--k", "3"});
  ASSERT_EQ(ev2.code, 0);
  EXPECT_NE(ev2.out.find("\nsentbleu\t120\t"), std::string::npos);
  const auto evj = nlohmann::json::parse(slurp(path("ev/report.json")));
  EXPECT_EQ(evj["metadata"]["checkpoint"], path("m/model.json"));
  EXPECT_EQ(evj["metadata"]["dataset"], data);

  const auto p = run({"predict", "--model", path("m/model.json"), "--data", data});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(p.out.substr(0, p.out.find('\n')), "segment_id\thyp_index\tsentbleu\thuman\terror");
  EXPECT_EQ(lineCount(p.out), 1 + 120);
}

TEST_F(Cli, TrainIsByteDeterministic) {
  const auto data = corpus();
  ASSERT_EQ(run(tinyTrain(data, path("a"))).code, 0);
  ASSERT_EQ(run(tinyTrain(data, path("b"))).code, 0);
  for (const char* f : {"model.json", "history.tsv", "report.tsv"}) {
    EXPECT_EQ(slurp(path("a/") + f), slurp(path("b/") + f)) << f;
  }
}

TEST_F(Cli, ConfigSuppliesDefaultsFlagsOverride) {
  const auto data = corpus();
  std::ofstream(path("cfg.json")) << R"({"model":{"vocab_size":70,"embed_dim":3,"hidden_dim":2,"head_hidden":4},)"
                                  << R"("train":{"max_epochs":4,"learning_rate":0.003}})";
  auto r = run({"--config", path("cfg.json"), "--out", path("c"), "train", "--data", data, "--dev-count", "8", "--epochs",
                "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ck = nlohmann::json::parse(slurp(path("c/model.json")));
  EXPECT_EQ(ck["config"]["embed_dim"], 3);
  EXPECT_EQ(lineCount(slurp(path("c/history.tsv"))), 2);
  std::ofstream(path("bad.json")) << "[1,2]";
  EXPECT_EQ(run({"--config", path("bad.json"), "--out", path("c2"), "train", "--data", data}).code, 2);
}

TEST_F(Cli, FinetuneReplacesTargets) {
  const auto data = corpus();
  ASSERT_EQ(run(tinyTrain(data, path("m"))).code, 0);
  const auto r = run({"--out", path("ft"), "finetune", "--model", path("m/model.json"), "--data", data, "--target",
                      "human", "--dev-count", "8", "--epochs", "1", "--lr", "0.003"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = mtme::loadCheckpoint(path("ft/model.json"));
  EXPECT_EQ(m.config.targets, std::vector<std::string>{"human"});
  EXPECT_EQ(m.history.size(), 1u);
}

TEST_F(Cli, ConfidenceReportsAccuracy) {
  const auto data = corpus();
  ASSERT_EQ(run(tinyTrain(data, path("m"))).code, 0);
  const auto r = run({"--out", path("cf"), "confidence", "--model", path("m/model.json"), "--data", data, "--dev-count",
                      "10", "--epochs", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 9), "accuracy\t");
  EXPECT_NE(r.out.find("\ntest_examples\t10\n"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(path("cf/confidence.json")));
  EXPECT_GE(j["accuracy"].get<double>(), 0.0);
  EXPECT_LE(j["accuracy"].get<double>(), 1.0);
  EXPECT_EQ(j["train_examples"], 30);
}

TEST_F(Cli, AblateWritesBundleAndResolvesPaths) {
  const auto data = corpus();
  fs::create_directories(dir / "exp");
  fs::copy_file(data, dir / "exp" / "train.jsonl");
  std::ofstream(path("exp/spec.json"))
      << R"({"name":"t","train_data":"train.jsonl","dev_count":8,"targets":["sentbleu",["sentbleu","human"]],)"
      << R"("model":{"vocab_size":80,"embed_dim":4,"hidden_dim":4,"head_hidden":6},)"
      << R"("train":{"max_epochs":1,"learning_rate":0.003},"k":[1,2]})";
  const auto r = run({"--out", path("ab"), "ablate", "--spec", path("exp/spec.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(path("ab/manifest.json")));
  EXPECT_EQ(manifest["cells"].size(), 4u);
  EXPECT_EQ(manifest["spec"]["seeds"], nlohmann::json::array({1}));
  EXPECT_TRUE(fs::exists(path("ab/runs.tsv")));
  EXPECT_TRUE(fs::exists(path("ab/ci.tsv")));
  EXPECT_EQ(r.out, slurp(path("ab/ci.tsv")));

  std::ofstream(path("exp/bad.json")) << R"({"train_data":"nope.jsonl","targets":["sentbleu"]})";
  const auto bad = run({"--out", path("ab2"), "ablate", "--spec", path("exp/bad.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("nope.jsonl"), std::string::npos);
}
