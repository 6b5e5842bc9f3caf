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

#include "reasondrive/ingest.hpp"

#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace reasondrive {
namespace {

using nlohmann::ordered_json;
using testing::MiniFixture;

ordered_json OneFrameIndex(const std::string& category_key) {
  ordered_json index = ordered_json::parse(R"({
    "s1": {"key_frames": {"f1": {
      "image_paths": {"CAM_FRONT": "a.jpg", "CAM_FRONT_LEFT": "b.jpg",
                      "CAM_FRONT_RIGHT": "c.jpg", "CAM_BACK": "d.jpg",
                      "CAM_BACK_LEFT": "e.jpg", "CAM_BACK_RIGHT": "f.jpg"},
      "QA": {}}}}})");
  index["s1"]["key_frames"]["f1"]["QA"][category_key] =
      ordered_json::array({{{"Q", "q1?"}, {"A", "a1"}}, {{"Q", "q2?"}, {"A", "a2"}}});
  return index;
}

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidRecord;
}

TEST(LoadDatasetTest, MiniFixtureManifest) {
  const Dataset ds = load_dataset(MiniFixture());
  EXPECT_EQ(ds.manifest.scenes, 2u);
  EXPECT_EQ(ds.manifest.frames, 3u);
  EXPECT_EQ(ds.manifest.qa_total, 12u);
  for (TaskCategory c : kAllCategories) EXPECT_EQ(ds.manifest.qa_by_category.at(c), 3u);
  EXPECT_EQ(ds.records.size(), 12u);
  EXPECT_TRUE(validate_dataset(ds).empty());
  for (const Frame& f : ds.frames) EXPECT_EQ(f.image_paths().size(), 6u);
}

TEST(LoadDatasetTest, AcceptsIndexFilePath) {
  const Dataset a = load_dataset(MiniFixture());
  const Dataset b = load_dataset(MiniFixture() / "index.json");
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.frames, b.frames);
}

TEST(LoadDatasetTest, Idempotent) {
  const Dataset a = load_dataset(MiniFixture());
  const Dataset b = load_dataset(MiniFixture());
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.manifest, b.manifest);
}

TEST(LoadDatasetTest, SynthesizedIdsFollowFileOrder) {
  const Dataset ds = load_dataset_from_json(OneFrameIndex("Planning "), "/tmp");
  ASSERT_EQ(ds.records.size(), 2u);
  EXPECT_EQ(ds.records[0].qa_id(), "s1/f1/planning/0");
  EXPECT_EQ(ds.records[1].qa_id(), "s1/f1/planning/1");
  EXPECT_EQ(ds.records[1].question(), "q2?");
  EXPECT_NE(ds.FindRecord("s1/f1/planning/1"), nullptr);
  EXPECT_NE(ds.FindFrame("s1", "f1"), nullptr);
  EXPECT_EQ(ds.FindFrame("s1", "f9"), nullptr);
}

TEST(LoadDatasetTest, UnknownCategory) {
  EXPECT_EQ(CodeOf([] { load_dataset_from_json(OneFrameIndex("percepton"), "/tmp"); }),
            ErrorCode::kUnknownCategory);
}

TEST(LoadDatasetTest, MissingAnswerIsHardError) {
  ordered_json index = OneFrameIndex("perception");
  index["s1"]["key_frames"]["f1"]["QA"]["perception"][0].erase("A");
  EXPECT_EQ(CodeOf([&] { load_dataset_from_json(index, "/tmp"); }),
            ErrorCode::kInvalidRecord);
}

TEST(LoadDatasetTest, UnknownViewAndMissingIndex) {
  ordered_json index = OneFrameIndex("perception");
  index["s1"]["key_frames"]["f1"]["image_paths"]["CAM_TOP"] = "x.jpg";
  EXPECT_EQ(CodeOf([&] { load_dataset_from_json(index, "/tmp"); }),
            ErrorCode::kMalformedIndex);
  testing::TempDir dir;
  EXPECT_THROW(load_dataset(dir.path()), Error);
}

TEST(LoadDatasetTest, MissingFilesReportedByValidation) {
  const Dataset ds = load_dataset_from_json(OneFrameIndex("perception"), "/nonexistent");
  const auto findings = validate_dataset(ds);
  EXPECT_EQ(findings.size(), 6u);
  for (const Finding& f : findings) EXPECT_EQ(f.code, ErrorCode::kFileNotFound);
}

TEST(LoadDatasetTest, NoQaLoss) {
  const Dataset ds = load_dataset(MiniFixture());
  const ordered_json raw =
      ordered_json::parse(testing::ReadText(MiniFixture() / "index.json"));
  std::size_t entries = 0;
  for (const auto& [scene, s] : raw.items()) {
    for (const auto& [frame, f] : s.at("key_frames").items()) {
      for (const auto& [cat, list] : f.at("QA").items()) entries += list.size();
    }
  }
  EXPECT_EQ(entries, ds.manifest.qa_total);
  std::size_t sum = 0;
  for (const auto& [c, n] : ds.manifest.qa_by_category) sum += n;
  EXPECT_EQ(sum, ds.manifest.qa_total);
  EXPECT_GE(ds.manifest.frames, ds.manifest.scenes);
}

TEST(SplitTest, FrameLevelAndDeterministic) {
  const Dataset ds = load_dataset(MiniFixture());
  const DatasetSplit a = split_dataset(ds.records, 2.0 / 3.0, 7);
  const DatasetSplit b = split_dataset(ds.records, 2.0 / 3.0, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.eval, b.eval);
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.eval.size(), 4u);
  std::set<std::string> train_frames, eval_frames;
  for (const QaRecord& r : a.train) train_frames.insert(r.frame_key());
  for (const QaRecord& r : a.eval) eval_frames.insert(r.frame_key());
  EXPECT_EQ(train_frames.size(), 2u);
  EXPECT_EQ(eval_frames.size(), 1u);
  for (const std::string& f : eval_frames) EXPECT_EQ(train_frames.count(f), 0u);
}

TEST(SplitTest, FrameLevelPropertyOverSeeds) {
  const Dataset ds = load_dataset(MiniFixture());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DatasetSplit s = split_dataset(ds.records, 0.5, seed);
    std::set<std::string> train_frames;
    for (const QaRecord& r : s.train) train_frames.insert(r.frame_key());
    for (const QaRecord& r : s.eval) EXPECT_EQ(train_frames.count(r.frame_key()), 0u);
    EXPECT_EQ(s.train.size() + s.eval.size(), ds.records.size());
  }
}

TEST(SplitTest, InvalidFraction) {
  const Dataset ds = load_dataset(MiniFixture());
  EXPECT_EQ(CodeOf([&] { split_dataset(ds.records, 0.0, 1); }),
            ErrorCode::kPreconditionViolated);
  EXPECT_EQ(CodeOf([&] { split_dataset(ds.records, 1.0, 1); }),
            ErrorCode::kPreconditionViolated);
  EXPECT_THROW(split_dataset({}, 0.5, 1), Error);
}

TEST(DatasetReportTest, MiniFixture) {
  const Dataset ds = load_dataset(MiniFixture());
  const DatasetReport report = dataset_report(ds.manifest, validate_dataset(ds));
  for (TaskCategory c : kAllCategories) {
    EXPECT_EQ(report.machine.at("manifest").at("qa_by_category").at(std::string(ToString(c))),
              3);
    EXPECT_NE(report.text.find(std::string(DisplayName(c))), std::string::npos);
  }
  EXPECT_EQ(ManifestFromJson(report.machine.at("manifest")), ds.manifest);
  EXPECT_EQ(report.machine.at("error_count"), 0);
}

TEST(DatasetReportTest, EmptyDatasetWarning) {
  const DatasetReport report = dataset_report(DatasetManifest{}, {});
  EXPECT_EQ(report.machine.at("warning_count"), 1);
  EXPECT_NE(report.machine.dump().find("EMPTY_DATASET"), std::string::npos);
}

}  // namespace
}  // namespace reasondrive
