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

// Loading of DriveLM-style dataset indices.
//
// The index is a JSON object:
//
//   { "<scene_id>": {
//       "key_frames": {
//         "<frame_id>": {
//           "image_paths": { "CAM_FRONT": "...", ..., "CAM_BACK_RIGHT": "..." },
//           "QA": { "perception": [ {"Q": "...", "A": "..."}, ... ],
//                   "prediction": [...], "planning": [...], "behavior": [...] }
//         } } } }
//
// Extra keys are ignored. QA entries may carry an "id"; otherwise ids are
// synthesized as scene_id/frame_id/category/ordinal (ordinal counts from 0
// in file order within the category).

#ifndef REASONDRIVE_INGEST_HPP_
#define REASONDRIVE_INGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasondrive/core.hpp"

namespace reasondrive {

inline constexpr std::string_view kDefaultIndexName = "index.json";

struct DatasetManifest {
  std::filesystem::path root;
  std::size_t scenes = 0;
  std::size_t frames = 0;
  std::size_t qa_total = 0;
  std::map<TaskCategory, std::size_t> qa_by_category;
  std::map<std::string, std::size_t> frames_by_scene;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  std::vector<Frame> frames;
  std::vector<QaRecord> records;
  DatasetManifest manifest;

  // nullptr when absent.
  const Frame* FindFrame(const std::string& scene_id,
                         const std::string& frame_id) const;
  const QaRecord* FindRecord(const std::string& qa_id) const;
};

// `root` is either a directory holding index.json or the index file itself;
// image paths resolve against the directory. Throws kMalformedIndex,
// kUnknownCategory, kDuplicateFrame, kInvalidRecord.
Dataset load_dataset(const std::filesystem::path& root);

// Same, from an already-parsed index.
Dataset load_dataset_from_json(const nlohmann::ordered_json& index,
                               const std::filesystem::path& root);

// Runs validate_frame on every frame and checks qa_id uniqueness.
std::vector<Finding> validate_dataset(const Dataset& dataset);

struct DatasetSplit {
  std::vector<QaRecord> train;
  std::vector<QaRecord> eval;
};

// Frame-level split: every frame's records land on one side. The train side
// receives round(train_fraction * frames) frames, clamped so both sides are
// non-empty when there are at least two frames. Throws kPreconditionViolated
// for a fraction outside (0, 1) and kEmptyDataset for no records.
DatasetSplit split_dataset(const std::vector<QaRecord>& records,
                           double train_fraction, std::uint64_t seed);

struct DatasetReport {
  nlohmann::json machine;  // JSON document
  std::string text;        // aligned plain-text table
};

DatasetReport dataset_report(const DatasetManifest& manifest,
                             const std::vector<Finding>& findings);

nlohmann::json ToJson(const DatasetManifest& manifest);
DatasetManifest ManifestFromJson(const nlohmann::json& j);

}  // namespace reasondrive

#endif  // REASONDRIVE_INGEST_HPP_
