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

#include "reasondrive/tag_codec.hpp"

#include <random>

#include <gtest/gtest.h>

namespace reasondrive {
namespace {

std::vector<std::string> Ids(const std::vector<ObjectTag>& tags) {
  std::vector<std::string> ids;
  for (const ObjectTag& t : tags) ids.push_back(t.id);
  return ids;
}

TEST(ParseStructuredTest, Strict) {
  const auto p = parse_structured(
      "<think>wet road, no brake</think><answer>Decelerate gradually.</answer>");
  EXPECT_EQ(p.think, "wet road, no brake");
  EXPECT_EQ(p.answer, "Decelerate gradually.");
  EXPECT_EQ(p.parse_mode, ParseMode::kStrict);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseStructuredTest, FallbackWhole) {
  const auto p = parse_structured("Brake gently to a stop.");
  EXPECT_FALSE(p.think.has_value());
  EXPECT_EQ(p.answer, "Brake gently to a stop.");
  EXPECT_EQ(p.parse_mode, ParseMode::kFallbackWhole);
}

TEST(ParseStructuredTest, FallbackAfterThink) {
  const auto p = parse_structured("<think>stop needed</think> Brake.");
  EXPECT_EQ(p.think, "stop needed");
  EXPECT_EQ(p.answer, "Brake.");
  EXPECT_EQ(p.parse_mode, ParseMode::kFallbackAfterThink);
}

TEST(ParseStructuredTest, AnswerBeforeThinkIsNotStrict) {
  const auto p = parse_structured("<answer>Go.</answer><think>clear road</think>");
  EXPECT_EQ(p.answer, "Go.");
  EXPECT_EQ(p.think, "clear road");
  EXPECT_NE(p.parse_mode, ParseMode::kStrict);
}

TEST(ParseStructuredTest, AnswerOnly) {
  const auto p = parse_structured("<answer>No.</answer>");
  EXPECT_FALSE(p.think.has_value());
  EXPECT_EQ(p.answer, "No.");
  EXPECT_EQ(p.parse_mode, ParseMode::kFallbackWhole);
}

TEST(ParseStructuredTest, FirstOfMultipleAnswersWins) {
  const auto p =
      parse_structured("<think>t</think><answer>first</answer><answer>second</answer>");
  EXPECT_EQ(p.answer, "first");
  EXPECT_EQ(p.parse_mode, ParseMode::kStrict);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_EQ(p.warnings[0].code, ErrorCode::kMultipleAnswerBlocks);
}

TEST(ParseStructuredTest, MarkerNamesAreCaseSensitive) {
  const auto p = parse_structured("<THINK>x</THINK><ANSWER>y</ANSWER>");
  EXPECT_EQ(p.parse_mode, ParseMode::kFallbackWhole);
  EXPECT_FALSE(p.think.has_value());
}

TEST(ParseStructuredTest, AnswerNeverContainsMarkers) {
  for (const char* raw : {"<think>a</think> b <answer> c", "</answer> x", "<answer>x",
                          "<think>a</think><answer>b</answer></answer>"}) {
    const auto p = parse_structured(raw);
    EXPECT_EQ(p.answer.find("<answer>"), std::string::npos) << raw;
    EXPECT_EQ(p.answer.find("</answer>"), std::string::npos) << raw;
  }
}

TEST(ParseStructuredTest, EmptyInputThrows) {
  try {
    parse_structured("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(ExtractTagsTest, FigureOneAnswer) {
  const std::string text =
      "There is a black car to the front of the ego vehicle, a white sedan to the "
      "front of the ego vehicle, a silver SUV to the back of the ego vehicle, a person "
      "in a wheelchair to the front right of the ego vehicle, and a yield to "
      "pedestrians to the front of the ego vehicle. The IDs of these objects are <c1>, "
      "<c2>, <c3>, <c4>, and <c5>.";
  EXPECT_EQ(Ids(extract_tags(text)),
            (std::vector<std::string>{"c1", "c2", "c3", "c4", "c5"}));
}

TEST(ExtractTagsTest, FirstOccurrenceWins) {
  const auto tags = extract_tags("<c2,CAM_FRONT,100,200> then <c2>");
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_EQ(tags[0].id, "c2");
  EXPECT_EQ(tags[0].camera, CameraView::kFront);
  ASSERT_TRUE(tags[0].coords.has_value());
  EXPECT_DOUBLE_EQ(tags[0].coords->x, 100.0);
  EXPECT_DOUBLE_EQ(tags[0].coords->y, 200.0);
}

TEST(ExtractTagsTest, NoTags) { EXPECT_TRUE(extract_tags("no tags here").empty()); }

TEST(ExtractTagsTest, IgnoresMalformedCandidates) {
  EXPECT_TRUE(extract_tags("<c0> <c01> <cx> <c1,CAM_TOP> <c1,CAM_FRONT,1>").empty());
  EXPECT_EQ(Ids(extract_tags("<c3, CAM_BACK_LEFT, -4.5, 1e> <c3>")),
            std::vector<std::string>{"c3"});
}

TEST(ExtractTagsTest, IdempotentAndOrderStable) {
  const std::string text = "<c5> <c2,CAM_BACK,1.5,2.5> <c9> <c2>";
  const auto first = extract_tags(text);
  EXPECT_EQ(Ids(first), (std::vector<std::string>{"c5", "c2", "c9"}));
  EXPECT_EQ(extract_tags(text), first);
}

TEST(ParseTagTest, Forms) {
  EXPECT_EQ(parse_tag("<c1>")->id, "c1");
  const auto t = parse_tag("<c12,CAM_FRONT_LEFT,812.5,-3>");
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->camera, CameraView::kFrontLeft);
  EXPECT_DOUBLE_EQ(t->coords->y, -3.0);
  EXPECT_FALSE(parse_tag("<c1> trailing").has_value());
}

TEST(EmitStructuredTest, Formats) {
  EXPECT_EQ(emit_structured(std::nullopt, "No."), "<answer>No.</answer>");
  EXPECT_EQ(emit_structured(std::string("x"), "y"), "<think>x</think>\n<answer>y</answer>");
}

TEST(EmitStructuredTest, RejectsNestedMarkers) {
  try {
    emit_structured(std::string("a <answer> b"), "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNestedMarkers);
  }
  EXPECT_THROW(emit_structured(std::nullopt, "a </think>"), Error);
}

std::string RandomText(std::mt19937_64& rng, int max_len) {
  // Printable ASCII plus a few characters that stress the parser.
  static const std::string alphabet =
      " abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,!?<>/c_-\n\t";
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
  return s;
}

TEST(TagCodecPropertyTest, RoundTripIsIdentity) {
  std::mt19937_64 rng(12345);
  int checked = 0;
  while (checked < 10000) {
    const std::string think(Trim(RandomText(rng, 60)));
    const std::string answer(Trim(RandomText(rng, 40)));
    if (think.empty() || answer.empty() || contains_marker(think) ||
        contains_marker(answer)) {
      continue;
    }
    const auto p = parse_structured(emit_structured(think, answer));
    ASSERT_EQ(p.parse_mode, ParseMode::kStrict) << think << " | " << answer;
    ASSERT_EQ(p.think, think);
    ASSERT_EQ(p.answer, answer);
    ++checked;
  }
}

TEST(TagCodecPropertyTest, ParserIsTotalOnPrintableInput) {
  std::mt19937_64 rng(777);
  const std::vector<std::string> pieces = {"<think>", "</think>", "<answer>",
                                           "</answer>", "<c1>", "<c2,CAM_FRONT,1,2>"};
  std::uniform_int_distribution<std::size_t> piece(0, pieces.size() - 1);
  std::bernoulli_distribution use_piece(0.3);
  for (int i = 0; i < 20000; ++i) {
    std::string raw;
    const int parts = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < parts; ++k) {
      raw += use_piece(rng) ? pieces[piece(rng)] : RandomText(rng, 12);
    }
    ParsedOutput p;
    ASSERT_NO_THROW(p = parse_structured(raw)) << raw;
    EXPECT_EQ(p.answer.find("<answer>"), std::string::npos);
    EXPECT_EQ(p.answer.find("</answer>"), std::string::npos);
  }
}

}  // namespace
}  // namespace reasondrive
