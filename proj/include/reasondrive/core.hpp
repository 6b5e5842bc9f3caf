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

// Shared domain types for the ReasonDrive toolkit: camera views, task
// categories, frames, QA records, reasoning chains and training examples.

#ifndef REASONDRIVE_CORE_HPP_
#define REASONDRIVE_CORE_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace reasondrive {

// Machine-readable error and finding codes. The string form (ToString) is
// what appears in reports and on the command line.
enum class ErrorCode {
  kMissingView,
  kFileNotFound,
  kInvalidRecord,
  kInvalidConfig,
  kMalformedIndex,
  kUnknownCategory,
  kDuplicateFrame,
  kEmptyDataset,
  kPreconditionViolated,
  kEmptyInput,
  kNestedMarkers,
  kMultipleAnswerBlocks,
  kUnparseableTag,
  kAuthFailed,
  kBudgetExceeded,
  kExhaustedRetries,
  kTransportError,
  kGenerationFailed,
  kSentenceBudgetExceeded,
  kSentenceBudgetShort,
  kMissingChain,
  kIoError,
  kEmptyEvalSet,
  kWeightsInvalid,
  kMalformedPredictions,
  kUnknownQaId,
  kDuplicateQaId,
  kMissingPrediction,
  kJudgeUnparseable,
};

std::string_view ToString(ErrorCode code);

// The error type thrown by every fallible operation in the toolkit.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

enum class Severity { kError, kWarning };

std::string_view ToString(Severity severity);

// A non-fatal observation: validation results, parse warnings, budget
// warnings. Findings are collected and reported rather than thrown.
struct Finding {
  Severity severity = Severity::kError;
  ErrorCode code = ErrorCode::kInvalidRecord;
  std::string subject;  // the view, path, qa_id... the finding is about
  std::string message;

  bool operator==(const Finding&) const = default;
};

nlohmann::json ToJson(const Finding& finding);
Finding FindingFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Enumerations

enum class CameraView {
  kFront,
  kFrontLeft,
  kFrontRight,
  kBack,
  kBackLeft,
  kBackRight,
};

inline constexpr std::size_t kNumCameraViews = 6;

// FRONT, FRONT_LEFT, FRONT_RIGHT, BACK, BACK_LEFT, BACK_RIGHT.
const std::array<CameraView, kNumCameraViews>& canonical_view_order();

// "FRONT", "FRONT_LEFT", ...
std::string_view ToString(CameraView view);
// Dataset key form: "CAM_FRONT", "CAM_FRONT_LEFT", ...
std::string_view ToCamName(CameraView view);
// Accepts both the plain and the CAM_ prefixed names.
std::optional<CameraView> ParseCameraView(std::string_view name);

enum class TaskCategory { kPerception, kPrediction, kPlanning, kBehavior };

inline constexpr std::array<TaskCategory, 4> kAllCategories = {
    TaskCategory::kPerception, TaskCategory::kPrediction,
    TaskCategory::kPlanning, TaskCategory::kBehavior};

// Lowercase key form used in datasets and reports: "perception", ...
std::string_view ToString(TaskCategory category);
// Display form: "Perception", ...
std::string_view DisplayName(TaskCategory category);
// Case-insensitive, surrounding whitespace ignored.
std::optional<TaskCategory> ParseTaskCategory(std::string_view name);

// ---------------------------------------------------------------------------
// Frames

struct Frame {
  std::string scene_id;
  std::string frame_id;
  // Image paths relative to the dataset root. A loaded frame may be
  // incomplete; validate_frame reports what is missing.
  std::map<CameraView, std::string> views;

  // The six paths in canonical order. Throws kMissingView when incomplete.
  std::vector<std::string> image_paths() const;
  std::string key() const { return scene_id + "/" + frame_id; }

  bool operator==(const Frame&) const = default;
};

// Empty iff every view is present and its file exists under dataset_root.
std::vector<Finding> validate_frame(const Frame& frame,
                                    const std::filesystem::path& dataset_root);

// ---------------------------------------------------------------------------
// Object tags

struct PixelCoords {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PixelCoords&) const = default;
};

// An object reference such as <c1> or <c1,CAM_FRONT,510.3,402.1>.
struct ObjectTag {
  std::string id;  // "c" followed by a positive integer
  std::optional<CameraView> camera;
  std::optional<PixelCoords> coords;  // only set when camera is set

  bool operator==(const ObjectTag&) const = default;
};

bool IsValidTagId(std::string_view id);

// ---------------------------------------------------------------------------
// QA records

class QaRecord {
 public:
  // Trims question and answer, rejects empty ones with kInvalidRecord and
  // derives gt_tags from the answer.
  static QaRecord Create(std::string qa_id, std::string scene_id,
                         std::string frame_id, TaskCategory category,
                         std::string question, std::string gt_answer);

  const std::string& qa_id() const { return qa_id_; }
  const std::string& scene_id() const { return scene_id_; }
  const std::string& frame_id() const { return frame_id_; }
  TaskCategory category() const { return category_; }
  const std::string& question() const { return question_; }
  const std::string& gt_answer() const { return gt_answer_; }
  const std::vector<ObjectTag>& gt_tags() const { return gt_tags_; }
  std::string frame_key() const { return scene_id_ + "/" + frame_id_; }

  bool operator==(const QaRecord&) const = default;

 private:
  QaRecord() = default;

  std::string qa_id_;
  std::string scene_id_;
  std::string frame_id_;
  TaskCategory category_ = TaskCategory::kPerception;
  std::string question_;
  std::string gt_answer_;
  std::vector<ObjectTag> gt_tags_;
};

nlohmann::json ToJson(const QaRecord& record);
// Tags are re-derived from the answer, never read back.
QaRecord QaRecordFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Reasoning chains

// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
// Decimal points, enumeration markers ("1.", "2)") and a few common
// abbreviations do not end a sentence.
int count_sentences(std::string_view text);

class ReasoningChain {
 public:
  // Throws kInvalidRecord for text that is empty after trimming.
  static ReasoningChain Create(std::string text, TaskCategory category,
                               std::string source_model);

  const std::string& text() const { return text_; }
  int sentence_count() const { return sentence_count_; }
  TaskCategory category() const { return category_; }
  const std::string& source_model() const { return source_model_; }

  bool operator==(const ReasoningChain&) const = default;

 private:
  ReasoningChain() = default;

  std::string text_;
  int sentence_count_ = 0;
  TaskCategory category_ = TaskCategory::kPerception;
  std::string source_model_;
};

nlohmann::json ToJson(const ReasoningChain& chain);
ReasoningChain ReasoningChainFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Training examples

enum class Variant { kReason, kSimple };

std::string_view ToString(Variant variant);
std::optional<Variant> ParseVariant(std::string_view name);

struct ExampleMeta {
  std::string qa_id;
  std::string scene_id;
  std::string frame_id;
  TaskCategory category = TaskCategory::kPerception;
  std::string original_question;
  std::string original_answer;

  bool operator==(const ExampleMeta&) const = default;
};

struct TrainingExample {
  std::string system_prompt;
  std::string question;
  std::optional<ReasoningChain> reasoning;  // present only for kReason
  std::string answer;
  std::vector<std::string> image_paths;  // six, canonical view order
  ExampleMeta meta;

  bool operator==(const TrainingExample&) const = default;
};

// ---------------------------------------------------------------------------
// Metric configuration

struct FinalWeights {
  double judge = 0.4;
  double language = 0.2;
  double match = 0.2;
  double accuracy = 0.2;

  bool operator==(const FinalWeights&) const = default;
};

struct MetricConfig {
  int bleu_max_order = 4;
  double bleu_smoothing_epsilon = 0.0;  // 0 disables smoothing
  double rouge_beta = 1.2;
  int cider_max_order = 4;
  double cider_sigma = 6.0;
  double cider_scale = 10.0;
  FinalWeights final_weights;

  // Throws kInvalidConfig (kWeightsInvalid for the weights).
  void Validate() const;

  bool operator==(const MetricConfig&) const = default;
};

void ValidateWeights(const FinalWeights& weights);

nlohmann::json ToJson(const MetricConfig& config);
// Missing keys keep their defaults.
MetricConfig MetricConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const FinalWeights& weights);
FinalWeights FinalWeightsFromJson(const nlohmann::json& j);

// Whitespace trimming shared across modules.
std::string_view Trim(std::string_view text);

}  // namespace reasondrive

#endif  // REASONDRIVE_CORE_HPP_
