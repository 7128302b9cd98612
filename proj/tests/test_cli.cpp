#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "sea/evaluation.hpp"
#include "sea/trainer.hpp"
#include "support.hpp"

namespace sea::cli {
namespace {

using test::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto r = invoke({"synth", "--n", "200", "--dim", "8", "--classes", "4", "--separation", "4", "--seed", "3",
                           "--out-features", p(dir_ / "f.seaf"), "--out-labels", p(dir_ / "l.seal"), "--test-n", "100",
                           "--out-test-features", p(dir_ / "tf.seaf"), "--out-test-labels", p(dir_ / "tl.seal")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  std::vector<std::string> train_args(const std::string& out_dir) {
    return {"train", "--features", p(dir_ / "f.seaf"), "--labels", p(dir_ / "l.seal"), "--epochs", "20", "--seed", "7",
            "--out", p(dir_ / out_dir)};
  }

  TempDir dir_{"cli"};
};

TEST_F(CliTest, HelpAndUsageErrors) {
  const auto help = invoke({"train", "--help"});
  EXPECT_EQ(help.code, kExitOk);
  for (const char* flag : {"--batch-size UINT [256]", "--momentum FLOAT [0.9]", "--epochs UINT [100]", "--seed UINT [0]",
                           "--lr FLOAT [1]", "--aug TEXT [sea]", "--eta FLOAT [0.4]"}) {
    EXPECT_NE(help.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_EQ(invoke({}).code, kExitInputError);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitInputError);
  EXPECT_EQ(invoke({"train", "--bogus"}).code, kExitInputError);
}

TEST_F(CliTest, SynthDeclaresClassesAndIsStable) {
  EXPECT_EQ(read_label_file(dir_ / "l.seal").num_classes(), 4U);
  const auto first = test::file_bytes(dir_ / "f.seaf");
  const auto again = invoke({"synth", "--n", "200", "--dim", "8", "--classes", "4", "--separation", "4", "--seed", "3",
                             "--out-features", p(dir_ / "g.seaf"), "--out-labels", p(dir_ / "g.seal")});
  ASSERT_EQ(again.code, kExitOk);
  EXPECT_EQ(test::file_bytes(dir_ / "g.seaf"), first);
}

TEST_F(CliTest, TrainWritesRunDirectoryAndReproduces) {
  ASSERT_EQ(invoke(train_args("run1")).code, kExitOk);
  ASSERT_EQ(invoke(train_args("run2")).code, kExitOk);
  for (const char* name : {"model.seaw", "report.log", "report.json", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "run1" / name)) << name;
  }
  EXPECT_EQ(test::file_bytes(dir_ / "run1/model.seaw"), test::file_bytes(dir_ / "run2/model.seaw"));

  const auto manifest = nlohmann::json::parse(test::read_text(dir_ / "run1/manifest.json"));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["tool_version"], std::string(kToolVersion));
  EXPECT_EQ(manifest["config"]["seed"], 7);
  EXPECT_EQ(manifest["config"]["aug"], "sea");
  EXPECT_EQ(manifest["formats"]["features"], kFeatureFormatVersion);

  const auto replay = invoke({"train", "--from-manifest", p(dir_ / "run1/manifest.json"), "--out", p(dir_ / "run3")});
  ASSERT_EQ(replay.code, kExitOk) << replay.err;
  EXPECT_EQ(test::file_bytes(dir_ / "run3/model.seaw"), test::file_bytes(dir_ / "run1/model.seaw"));

  const auto log = test::read_text(dir_ / "run1/report.log");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 21);
}

TEST_F(CliTest, HighSeparationTrainsToFullAccuracy) {
  auto args = train_args("run");
  args.insert(args.end(), {"--aug", "none"});
  ASSERT_EQ(invoke(args).code, kExitOk);
  const auto data = Dataset(read_feature_file(dir_ / "f.seaf"), read_label_file(dir_ / "l.seal"));
  const auto model = read_checkpoint(dir_ / "run/model.seaw");
  EXPECT_EQ(top1_accuracy(predict(model, data.features), data.labels.labels()), 1.0);
  const auto eval = invoke({"eval", "--model", p(dir_ / "run/model.seaw"), "--features", p(dir_ / "f.seaf"), "--labels",
                            p(dir_ / "l.seal")});
  EXPECT_EQ(eval.code, kExitOk);
  EXPECT_EQ(eval.out, "1.0000\n");
}

TEST_F(CliTest, ZeroEpochsWritesZeroModel) {
  auto args = train_args("zero");
  args[6] = "0";
  ASSERT_EQ(invoke(args).code, kExitOk);
  EXPECT_EQ(read_checkpoint(dir_ / "zero/model.seaw").weights, Eigen::MatrixXd::Zero(8, 4));
}

TEST_F(CliTest, FailedRunLeavesNoOutputs) {
  auto args = train_args("bad");
  args.insert(args.end(), {"--lr", "-1"});
  EXPECT_EQ(invoke(args).code, kExitInputError);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "bad"));
  auto diverge = train_args("div");
  diverge.insert(diverge.end(), {"--lr", "1e308", "--weight-decay", "1", "--aug", "none", "--momentum", "0"});
  const auto r = invoke(diverge);
  EXPECT_EQ(r.code, kExitDiverged) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir_ / "div/model.seaw"));
  auto missing = train_args("missing");
  missing[2] = p(dir_ / "nope.seaf");
  EXPECT_EQ(invoke(missing).code, kExitInputError);
  auto unknown_mode = train_args("mode");
  unknown_mode.insert(unknown_mode.end(), {"--aug", "isda"});
  EXPECT_EQ(invoke(unknown_mode).code, kExitInputError);
}

TEST_F(CliTest, EvalMetricsAndErrors) {
  // Imbalanced hand-made set: truth [0,0,0,1], model predicts [0,0,1,1].
  write_feature_file(FeatureMatrix(4, 2, {1, 0, 1, 0, 0, 1, 0, 1}), dir_ / "e.seaf");
  write_label_file(LabelVector(2, {0, 0, 0, 1}), dir_ / "e.seal");
  write_checkpoint(LinearModel{Eigen::MatrixXd::Identity(2, 2)}, dir_ / "e.seaw");
  const std::vector<std::string> base{"eval", "--model", p(dir_ / "e.seaw"), "--features", p(dir_ / "e.seaf"),
                                      "--labels", p(dir_ / "e.seal")};
  EXPECT_EQ(invoke(base).out, "0.7500\n");
  auto per_class = base;
  per_class.insert(per_class.end(), {"--metric", "mean_per_class"});
  EXPECT_EQ(invoke(per_class).out, "0.8333\n");
  auto missing = base;
  missing[2] = p(dir_ / "none.seaw");
  EXPECT_EQ(invoke(missing).code, kExitInputError);
  auto wrong_dim = base;
  wrong_dim[4] = p(dir_ / "f.seaf");
  wrong_dim[6] = p(dir_ / "l.seal");
  EXPECT_EQ(invoke(wrong_dim).code, kExitInputError);
}

TEST_F(CliTest, ConcatWidthsAndMismatch) {
  const auto r = invoke({"concat", p(dir_ / "f.seaf"), p(dir_ / "f.seaf"), "-o", p(dir_ / "cat.seaf")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto cat = read_feature_file(dir_ / "cat.seaf");
  EXPECT_EQ(cat.cols(), 16U);
  EXPECT_TRUE(cat.normalized());
  const auto mismatch = invoke({"concat", p(dir_ / "f.seaf"), p(dir_ / "tf.seaf"), "-o", p(dir_ / "bad.seaf")});
  EXPECT_EQ(mismatch.code, kExitInputError);
  EXPECT_NE(mismatch.err.find("rows"), std::string::npos) << mismatch.err;
}

TEST_F(CliTest, GridTableAndResume) {
  const std::vector<std::string> args{"grid",   "--features", p(dir_ / "f.seaf"), "--labels", p(dir_ / "l.seal"),
                                      "--lr",   "1",          "--eta",            "0,0.4",    "--epochs",
                                      "5",      "--out",      p(dir_ / "g")};
  const auto r = invoke(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = test::read_text(dir_ / "g/grid.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "g/best_model.seaw"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "g/grid.json"));
  auto manifest = nlohmann::json::parse(test::read_text(dir_ / "g/manifest.json"));
  EXPECT_EQ(manifest["result"]["points_trained"], 2);

  // Simulate an interruption after the first point, including a torn line.
  const auto points = test::read_text(dir_ / "g/points.jsonl");
  {
    std::ofstream out(dir_ / "g/points.jsonl", std::ios::trunc);
    out << points.substr(0, points.find('\n') + 1) << "{\"index\": 1, \"lr\"";
  }
  const auto best_before = test::file_bytes(dir_ / "g/best_model.seaw");
  const auto resumed = invoke({"grid", "--resume", p(dir_ / "g")});
  ASSERT_EQ(resumed.code, kExitOk) << resumed.err;
  manifest = nlohmann::json::parse(test::read_text(dir_ / "g/manifest.json"));
  EXPECT_EQ(manifest["result"]["points_trained"], 1);
  EXPECT_EQ(manifest["result"]["points_reused"], 1);
  EXPECT_EQ(test::read_text(dir_ / "g/grid.csv").substr(0, 60), csv.substr(0, 60));
  EXPECT_EQ(test::file_bytes(dir_ / "g/best_model.seaw"), best_before);
}

TEST_F(CliTest, PaperGridExpandsToSixLists) {
  const auto r = invoke({"grid", "--paper-grid", "--dry-run"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "grid: 1728 point(s)\n");
  const auto narrowed = invoke({"grid", "--paper-grid", "--eta", "0.4", "--dry-run"});
  EXPECT_EQ(narrowed.out, "grid: 432 point(s)\n");
  const auto bad = invoke({"grid", "--features", p(dir_ / "f.seaf"), "--labels", p(dir_ / "l.seal"), "--paper-grid",
                           "--metric", "bogus", "--out", p(dir_ / "pg")});
  EXPECT_EQ(bad.code, kExitInputError);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "pg"));
}

TEST_F(CliTest, ImportCsv) {
  {
    std::ofstream out(dir_ / "d.csv");
    out << "3,4,1\n1,0,0\n";
  }
  const auto r = invoke({"import-csv", "--csv", p(dir_ / "d.csv"), "--out-features", p(dir_ / "c.seaf"),
                         "--out-labels", p(dir_ / "c.seal"), "--labels-last-column"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_feature_file(dir_ / "c.seaf").cols(), 2U);
  EXPECT_EQ(read_label_file(dir_ / "c.seal").num_classes(), 2U);
}

}  // namespace
}  // namespace sea::cli
