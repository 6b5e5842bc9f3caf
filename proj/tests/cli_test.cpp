// Copyright 2026 The ReasonDrive Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reasondrive/cli.hpp"

#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "reasondrive/ingest.hpp"
#include "test_support.hpp"

namespace reasondrive {
namespace {

using json = nlohmann::json;
using testing::MiniFixture;
using testing::ReadText;
using testing::TempDir;
using testing::WriteText;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result RunCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string PerfectPredictions() {
  const Dataset dataset = load_dataset(MiniFixture());
  std::string jsonl;
  for (const QaRecord& r : dataset.records) {
    jsonl += json{{"id", r.qa_id()},
                  {"output", "<think>Checked.</think><answer>" + r.gt_answer() + "</answer>"}}
                 .dump() +
             "\n";
  }
  return jsonl;
}

TEST(CliTest, IngestJson) {
  const Result r = RunCli({"ingest", "--dataset", MiniFixture().string(), "--format", "json"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("error_count"), 0);
  EXPECT_EQ(j.at("manifest").at("frames"), 3);
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(RunCli({"ingest", "--dataset", MiniFixture().string(), "--bogus"}).code,
            cli::kExitUsage);
  EXPECT_EQ(RunCli({"ingest"}).code, cli::kExitUsage);
  EXPECT_EQ(RunCli({"eval", "--predictions", "p.jsonl", "--dataset", "d", "--judge", "maybe"})
                .code,
            cli::kExitUsage);
}

TEST(CliTest, MissingDatasetIsValidationError) {
  TempDir dir;
  const Result r = RunCli({"ingest", "--dataset", (dir / "nope").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("error: "), std::string::npos);
}

TEST(CliTest, SplitWritesDisjointSides) {
  TempDir dir;
  const std::string out = (dir / "split.json").string();
  ASSERT_EQ(RunCli({"split", "--dataset", MiniFixture().string(), "--seed", "3", "--out", out})
                .code,
            cli::kExitOk);
  const json j = json::parse(ReadText(out));
  EXPECT_EQ(j.at("train").size() + j.at("eval").size(), 12u);
  for (const json& id : j.at("train")) {
    EXPECT_EQ(std::find(j.at("eval").begin(), j.at("eval").end(), id), j.at("eval").end());
  }
}

TEST(CliTest, ExportReasonWithoutChains) {
  TempDir dir;
  const Result r = RunCli({"export", "--dataset", MiniFixture().string(), "--variant", "reason",
                        "--chains", (dir / "missing.jsonl").string(), "--out",
                        (dir / "train.jsonl").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("MISSING_CHAIN"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "train.jsonl"));
}

TEST(CliTest, EvalWithoutJudgeWritesRun) {
  TempDir dir;
  WriteText(dir / "pred.jsonl", PerfectPredictions());
  const std::string run_dir = (dir / "run").string();
  const Result r = RunCli({"eval", "--dataset", MiniFixture().string(), "--predictions",
                        (dir / "pred.jsonl").string(), "--judge", "off", "--out", run_dir,
                        "--name", "perfect"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const json scores = json::parse(ReadText(dir / "run" / "scores.json"));
  EXPECT_DOUBLE_EQ(scores.at("overall").at("accuracy").get<double>(), 1.0);
  EXPECT_EQ(scores.at("model_name"), "perfect");
  EXPECT_NE(ReadText(dir / "run" / "report.md").find("# Evaluation: perfect"),
            std::string::npos);

  const Result report = RunCli({"report", "--run", run_dir});
  ASSERT_EQ(report.code, cli::kExitOk) << report.err;
  EXPECT_NE(report.out.find("| Overall |"), std::string::npos);
}

TEST(CliTest, EvalWithMockJudge) {
  TempDir dir;
  WriteText(dir / "pred.jsonl", PerfectPredictions());
  const Result r = RunCli({"eval", "--dataset", MiniFixture().string(), "--predictions",
                        (dir / "pred.jsonl").string(), "--transport", "mock", "--cache-dir",
                        (dir / "cache").string(), "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const json scores = json::parse(ReadText(dir / "run" / "scores.json"));
  EXPECT_DOUBLE_EQ(scores.at("overall").at("judge").get<double>(), 50.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "verdicts.json"));
}

TEST(CliTest, BadWeightsRejected) {
  TempDir dir;
  WriteText(dir / "pred.jsonl", PerfectPredictions());
  const Result r = RunCli({"eval", "--dataset", MiniFixture().string(), "--predictions",
                        (dir / "pred.jsonl").string(), "--judge", "off", "--weights",
                        "0.5,0.5,0.5,0.5", "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("WEIGHTS_INVALID"), std::string::npos) << r.err;
}

TEST(CliTest, JsonErrorEnvelope) {
  TempDir dir;
  const Result r =
      RunCli({"report", "--run", (dir / "absent").string(), "--format", "json"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  const json j = json::parse(r.out);
  EXPECT_TRUE(j.at("error").contains("code"));
  EXPECT_TRUE(j.at("error").contains("message"));
}

}  // namespace
}  // namespace reasondrive
