#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include "hmt/checkpoint.hpp"
#include "hmt/data.hpp"
#include "hmt_testing.hpp"

namespace hmt {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string field; std::getline(in, field, '\t');) out.push_back(field);
  return out;
}

struct CliRun {
  int status;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hmt_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    write_records(path("train.jsonl"), testing::synthetic_corpus({16, 10, 4}));
    std::ofstream(path("config.json"))
        << R"({"embed_dim": 8, "hidden_dim": 8, "tag_dim": 8, "batch_size": 4,)"
        << R"( "max_epochs": 2, "validation_fraction": 0.25, "seed": 3})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static void write_records(const fs::path& p, const std::vector<SentenceRecord>& records) {
    std::ofstream os(p);
    for (const auto& r : records) os << record_to_json(r).dump() << '\n';
  }

  CliRun run(const std::string& args) const {
    const fs::path out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = std::string(HMT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
  }

  CliRun train(const std::string& out_dir, const std::string& extra = "") const {
    return run("train --data " + path("train.jsonl").string() + " --config " + path("config.json").string() +
               " --out " + path(out_dir).string() + " " + extra);
  }

  fs::path dir_;
};

TEST_F(Cli, TrainWritesCheckpointAndLog) {
  const CliRun r = train("m");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.err.find("warning: no pretrained vectors given"), std::string::npos) << r.err;
  ASSERT_TRUE(fs::exists(path("m") / "model.ckpt"));
  const auto log = lines_of(slurp(path("m") / "train.log"));
  ASSERT_EQ(log.size(), 2u);
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto fields = split_tabs(log[k]);
    ASSERT_EQ(fields.size(), 5u) << log[k];
    EXPECT_EQ(fields[0], std::to_string(k + 1));
  }
  const Checkpoint c = load_checkpoint(path("m") / "model.ckpt");
  EXPECT_TRUE(c.model.has_ee());
  EXPECT_EQ(c.model.je().enc_fwd.input_dim, 8 + 2 * 8);
  EXPECT_EQ(c.config.seed, 3u);
}

TEST_F(Cli, AblatedTrainingNarrowsTheJeInput) {
  const CliRun r = train("ab", "--ablate-ee --seed 11");
  ASSERT_EQ(r.status, 0) << r.err;
  const Checkpoint c = load_checkpoint(path("ab") / "model.ckpt");
  EXPECT_FALSE(c.model.has_ee());
  EXPECT_EQ(c.model.je().enc_fwd.input_dim, 8);
  EXPECT_EQ(c.config.seed, 11u);

  const CliRun e = run("eval --checkpoint " + (path("ab") / "model.ckpt").string() + " --data " +
                    path("train.jsonl").string());
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_NE(e.out.find("entities: n/a"), std::string::npos) << e.out;
}

TEST_F(Cli, PretrainedCoverageIsReported) {
  std::ofstream(path("vec.txt")) << "zzz-not-in-corpus 1 2 3 4 5 6 7 8\n";
  const CliRun r = train("p", "--pretrained " + path("vec.txt").string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("pretrained vectors cover 0 of"), std::string::npos) << r.out;
  EXPECT_EQ(r.err.find("no pretrained vectors"), std::string::npos);
}

TEST_F(Cli, TrainingIsDeterministic) {
  ASSERT_EQ(train("a").status, 0);
  ASSERT_EQ(train("b").status, 0);
  EXPECT_EQ(slurp(path("a") / "train.log"), slurp(path("b") / "train.log"));
  EXPECT_EQ(slurp(path("a") / "model.ckpt"), slurp(path("b") / "model.ckpt"));
}

TEST_F(Cli, EvalPrintsAStableScoresLine) {
  ASSERT_EQ(train("m").status, 0);
  const std::string args =
      "eval --checkpoint " + (path("m") / "model.ckpt").string() + " --data " + path("train.jsonl").string();
  const CliRun a = run(args), b = run(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto lines = lines_of(a.out);
  ASSERT_GE(lines.size(), 3u);
  const auto fields = split_tabs(lines[0]);
  ASSERT_EQ(fields.size(), 13u);
  EXPECT_EQ(fields[0], "scores");
  std::size_t gold = 0;
  for (const auto& r : testing::synthetic_corpus({16, 10, 4})) gold += r.triples.size();
  EXPECT_EQ(fields[5], std::to_string(gold));
}

TEST_F(Cli, PredictionsReingestCleanly) {
  ASSERT_EQ(train("m").status, 0);
  const CliRun r = run("predict --checkpoint " + (path("m") / "model.ckpt").string() + " --data " +
                    path("train.jsonl").string() + " --out " + path("pred.jsonl").string());
  ASSERT_EQ(r.status, 0) << r.err;
  std::vector<std::string> warnings;
  const auto records = read_records(path("pred.jsonl"), &warnings);
  EXPECT_EQ(records.size(), 16u);
  EXPECT_TRUE(warnings.empty());
  for (const auto& rec : records) EXPECT_TRUE(rec.annotated);
}

TEST_F(Cli, UnannotatedTrainingDataIsRejected) {
  std::ofstream(path("raw.jsonl")) << R"({"tokens": ["a", "b"]})" << '\n';
  const CliRun r = run("train --data " + path("raw.jsonl").string() + " --out " + path("x").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("no gold annotations"), std::string::npos) << r.err;
}

TEST_F(Cli, MalformedLineIsNamed) {
  std::ofstream(path("bad.jsonl")) << R"({"tokens": ["a"], "entities": [], "triples": []})" << "\n{oops\n";
  const CliRun r = run("train --data " + path("bad.jsonl").string() + " --out " + path("x").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingRequiredOptionFails) {
  EXPECT_NE(run("train --out " + path("x").string()).status, 0);
  EXPECT_NE(run("").status, 0);
}

TEST_F(Cli, ModelThatPredictsNothingScoresZero) {
  ASSERT_EQ(train("m").status, 0);
  Checkpoint c = load_checkpoint(path("m") / "model.ckpt");
  // every token confidently O in both tasks
  c.model.je().proj.b_y.value(0, 0) = 1e3;
  c.model.ee().proj.b_y.value(0, 0) = 1e3;
  save_checkpoint(path("empty.ckpt"), c.model, c.ee, c.je, c.vocab, c.config);
  const CliRun r = run("eval --checkpoint " + path("empty.ckpt").string() + " --data " + path("train.jsonl").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto fields = split_tabs(lines_of(r.out).at(0));
  ASSERT_EQ(fields.size(), 13u);
  for (int k : {1, 2, 3, 4, 6, 7, 8, 9, 10, 12}) EXPECT_EQ(std::stod(fields[k]), 0.0) << k;
}

TEST_F(Cli, PredictsTheWorkedExampleTriple) {
  const std::string sentence =
      R"({"tokens": ["United", "States", "President", "-LRB-", "45th", "Donald", "J.", "Trump"],)"
      R"( "entities": [{"start": 0, "end": 1, "type": "LOC"}, {"start": 5, "end": 7, "type": "PER"}],)"
      R"( "triples": [{"head_start": 0, "head_end": 1, "tail_start": 5, "tail_end": 7,)"
      R"( "relation": "Country--President"}]})";
  std::ofstream(path("fig.jsonl")) << sentence << '\n' << sentence << '\n';
  std::ofstream(path("fig.json")) << R"({"embed_dim": 8, "hidden_dim": 8, "tag_dim": 8, "batch_size": 1,)"
                                  << R"( "dropout_rate": 0.0, "learning_rate": 0.01, "max_epochs": 60,)"
                                  << R"( "patience": 60, "validation_fraction": 0.5, "seed": 1})";
  ASSERT_EQ(run("train --data " + path("fig.jsonl").string() + " --config " + path("fig.json").string() +
                " --out " + path("fig").string())
                .status,
            0);
  const CliRun r = run("predict --checkpoint " + (path("fig") / "model.ckpt").string() + " --data " +
                       path("fig.jsonl").string() + " --out " + path("fig_pred.jsonl").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = lines_of(slurp(path("fig_pred.jsonl")));
  ASSERT_EQ(lines.size(), 2u);
  const auto j = nlohmann::json::parse(lines[0]);
  ASSERT_EQ(j["triples"].size(), 1u) << lines[0];
  EXPECT_EQ(j["triples"][0]["head"], "United States");
  EXPECT_EQ(j["triples"][0]["relation"], "Country--President");
  EXPECT_EQ(j["triples"][0]["tail"], "Donald J. Trump");
  EXPECT_EQ(j["triples"][0]["tail_start"], 5);
  EXPECT_EQ(j["triples"][0]["tail_end"], 7);
}

}  // namespace
}  // namespace hmt
