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

#include "reasondrive/harness.hpp"

#include <gtest/gtest.h>

#include "reasondrive/hashing.hpp"
#include "reasondrive/transports.hpp"
#include "test_support.hpp"

namespace reasondrive {
namespace {

using json = nlohmann::json;
using testing::MiniFixture;
using testing::TempDir;

std::string Structured(const std::string& answer) {
  return "<think>Looking at the cameras.</think>\n<answer>" + answer + "</answer>";
}

std::vector<PredictionEntry> Perfect(const Dataset& dataset) {
  std::vector<PredictionEntry> out;
  for (const QaRecord& r : dataset.records) out.push_back({r.qa_id(), Structured(r.gt_answer())});
  return out;
}

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override { dataset_ = load_dataset(MiniFixture()); }

  std::vector<JudgeVerdict> Judge(std::shared_ptr<Transport> transport,
                                  const std::vector<EvalPair>& pairs) {
    Gateway gw(std::move(transport), GatewayOptions{}, std::make_shared<FakeClock>());
    return judge_pairs(pairs, dataset_, gw, PromptLibrary::Defaults(), JudgeOptions{});
  }

  Dataset dataset_;
};

TEST_F(HarnessTest, ParsePredictions) {
  const auto entries = parse_predictions(
      "{\"id\":\"a\",\"output\":\"x\"}\n\n{\"id\":\"b\",\"output\":\"y\"}\n");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1].qa_id, "b");
  EXPECT_EQ(entries[1].output, "y");
  try {
    parse_predictions("{\"id\":\"a\",\"output\":\"x\"}\nnot json\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedPredictions);
    EXPECT_NE(e.detail().find('2'), std::string::npos);
  }
  EXPECT_THROW(parse_predictions("{\"id\":\"a\"}\n"), Error);
}

TEST_F(HarnessTest, MatchPerfectPredictions) {
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  ASSERT_EQ(loaded.pairs.size(), 12u);
  EXPECT_EQ(loaded.parse_modes.at(ParseMode::kStrict), 12u);
  EXPECT_TRUE(loaded.unknown_ids.empty());
  EXPECT_TRUE(loaded.missing_ids.empty());
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(loaded.pairs[i].qa_id, dataset_.records[i].qa_id());
    EXPECT_EQ(loaded.pairs[i].candidate, dataset_.records[i].gt_answer());
  }
}

TEST_F(HarnessTest, FallbackUnknownAndDuplicate) {
  auto entries = Perfect(dataset_);
  entries[0].output = "plain answer without tags";
  entries.push_back({"nope/0/perception/9", Structured("x")});
  entries.push_back({entries[1].qa_id, Structured("second copy")});
  entries.erase(entries.begin() + 3);
  const LoadedPredictions loaded = match_predictions(entries, dataset_);
  EXPECT_EQ(loaded.pairs.size(), 11u);
  EXPECT_EQ(loaded.parse_modes.at(ParseMode::kFallbackWhole), 1u);
  EXPECT_EQ(loaded.pairs[0].candidate, "plain answer without tags");
  EXPECT_EQ(loaded.unknown_ids, std::vector<std::string>{"nope/0/perception/9"});
  EXPECT_EQ(loaded.duplicate_ids, std::vector<std::string>{dataset_.records[1].qa_id()});
  EXPECT_EQ(loaded.pairs[1].candidate, dataset_.records[1].gt_answer());
  EXPECT_EQ(loaded.missing_ids, std::vector<std::string>{dataset_.records[3].qa_id()});
}

TEST(JudgeScoreTest, Parse) {
  EXPECT_EQ(parse_judge_score("85"), 85);
  EXPECT_EQ(parse_judge_score("Score: 92/100. Good answer."), 92);
  EXPECT_EQ(parse_judge_score("100"), 100);
  EXPECT_EQ(parse_judge_score("0 - wrong"), 0);
  EXPECT_FALSE(parse_judge_score("great answer").has_value());
  EXPECT_FALSE(parse_judge_score("-5").has_value());
  EXPECT_FALSE(parse_judge_score("250").has_value());
}

TEST_F(HarnessTest, JudgeReplies) {
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  const std::vector<EvalPair> one{loaded.pairs[0]};

  auto v = Judge(MockTransport::Canned("85"), one);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].score, 85);
  EXPECT_EQ(v[0].requests, 1);
  EXPECT_TRUE(v[0].findings.empty());

  v = Judge(MockTransport::Canned("Score: 92/100. Good answer."), one);
  EXPECT_EQ(v[0].score, 92);

  auto script = MockTransport::Scripted(
      {{200, "great answer", {}, ""}, {200, "superb", {}, ""}, {200, "nice", {}, ""}});
  v = Judge(script, one);
  EXPECT_EQ(v[0].score, 0);
  EXPECT_EQ(v[0].requests, 3);
  EXPECT_EQ(script->calls(), 3);
  ASSERT_EQ(v[0].findings.size(), 1u);
  EXPECT_EQ(v[0].findings[0].code, ErrorCode::kJudgeUnparseable);

  script = MockTransport::Scripted({{200, "hmm", {}, ""}, {200, "70", {}, ""}});
  v = Judge(script, one);
  EXPECT_EQ(v[0].score, 70);
  EXPECT_EQ(v[0].requests, 2);
}

TEST_F(HarnessTest, JudgeAuthFailureAborts) {
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  EXPECT_THROW(Judge(MockTransport::Scripted({{401, "", {}, "no"}}), loaded.pairs), Error);
}

TEST_F(HarnessTest, IdentityScoresOne) {
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  const MetricReport report = evaluate(dataset_, loaded, MetricConfig{}, nullptr);
  EXPECT_EQ(report.overall.pairs, 12u);
  EXPECT_DOUBLE_EQ(report.overall.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.match, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.rouge_l, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.bleu[0], 1.0);
  EXPECT_FALSE(report.overall.judged);
}

TEST_F(HarnessTest, EmptyCandidatesScoreZero) {
  std::vector<PredictionEntry> entries;
  for (const QaRecord& r : dataset_.records) entries.push_back({r.qa_id(), ""});
  const MetricReport report =
      evaluate(dataset_, match_predictions(entries, dataset_), MetricConfig{}, nullptr);
  EXPECT_DOUBLE_EQ(report.overall.accuracy, 0.0);
  EXPECT_DOUBLE_EQ(report.overall.match, 0.0);
  EXPECT_DOUBLE_EQ(report.overall.rouge_l, 0.0);
  EXPECT_DOUBLE_EQ(report.overall.cider, 0.0);
  EXPECT_DOUBLE_EQ(report.overall.final, 0.0);
}

TEST_F(HarnessTest, NoPredictionsIsAnError) {
  try {
    evaluate(dataset_, match_predictions({}, dataset_), MetricConfig{}, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyEvalSet);
  }
}

TEST_F(HarnessTest, CategoriesPartitionOverall) {
  auto entries = Perfect(dataset_);
  entries[2].output = Structured("something else entirely");
  const LoadedPredictions loaded = match_predictions(entries, dataset_);
  std::vector<JudgeVerdict> verdicts;
  for (const EvalPair& p : loaded.pairs) verdicts.push_back({p.qa_id, 60, "60", 1, {}});
  const MetricReport report = evaluate(dataset_, loaded, MetricConfig{}, &verdicts);
  std::size_t total = 0;
  for (const auto& [category, scores] : report.by_category) total += scores.pairs;
  EXPECT_EQ(total, report.overall.pairs);
  EXPECT_EQ(report.by_category.size(), 4u);
  ASSERT_TRUE(report.overall.judge.has_value());
  EXPECT_DOUBLE_EQ(*report.overall.judge, 60.0);
  EXPECT_TRUE(report.overall.judged);

  const double expected = final_score(
      FinalComponents{report.overall.judge, report.overall.language, report.overall.match,
                      report.overall.accuracy},
      MetricConfig{}.final_weights);
  EXPECT_NEAR(report.overall.final, expected, 1e-12);
}

TEST_F(HarnessTest, MarkdownColumns) {
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  const MetricReport report = evaluate(dataset_, loaded, MetricConfig{}, nullptr);
  const std::string md = render_markdown(report);
  const std::vector<std::string> expected{"Accuracy", "ChatGPT", "Match",   "Bleu_1",
                                          "Bleu_2",   "Bleu_3",  "Bleu_4",  "ROUGE_L",
                                          "CIDEr",    "Final Score"};
  EXPECT_EQ(report_columns(), expected);
  std::string header = "| Subset |";
  for (const std::string& c : expected) header += " " + c + " |";
  EXPECT_NE(md.find(header), std::string::npos) << md;
  EXPECT_NE(md.find("| Overall |"), std::string::npos);
  EXPECT_NE(md.find("n/a"), std::string::npos);
  EXPECT_NE(md.find('*'), std::string::npos);
}

TEST_F(HarnessTest, RunRoundTripIsDeterministic) {
  TempDir dir;
  const LoadedPredictions loaded = match_predictions(Perfect(dataset_), dataset_);
  std::vector<JudgeVerdict> verdicts;
  for (const EvalPair& p : loaded.pairs) verdicts.push_back({p.qa_id, 90, "90", 1, {}});
  MetricReport report = evaluate(dataset_, loaded, MetricConfig{}, &verdicts);
  report.model_name = "unit";
  write_run(dir / "a", report, &verdicts);
  write_run(dir / "b", report, &verdicts);
  EXPECT_EQ(ReadFileBytes(dir / "a" / "scores.json"), ReadFileBytes(dir / "b" / "scores.json"));
  EXPECT_EQ(ReadFileBytes(dir / "a" / "report.md"), ReadFileBytes(dir / "b" / "report.md"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "verdicts.json"));

  const MetricReport back = read_run(dir / "a");
  EXPECT_EQ(ToJson(back), ToJson(report));
  EXPECT_EQ(render_markdown(back), render_markdown(report));
}

TEST_F(HarnessTest, DatasetDigestStable) {
  EXPECT_EQ(dataset_digest(dataset_), dataset_digest(load_dataset(MiniFixture())));
  EXPECT_EQ(dataset_digest(dataset_).size(), 64u);
}

}  // namespace
}  // namespace reasondrive
