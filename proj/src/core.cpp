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

#include "reasondrive/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "reasondrive/tag_codec.hpp"

namespace reasondrive {

namespace {

using json = nlohmann::json;

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }

}  // namespace

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingView: return "MISSING_VIEW";
    case ErrorCode::kFileNotFound: return "FILE_NOT_FOUND";
    case ErrorCode::kInvalidRecord: return "INVALID_RECORD";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kMalformedIndex: return "MALFORMED_INDEX";
    case ErrorCode::kUnknownCategory: return "UNKNOWN_CATEGORY";
    case ErrorCode::kDuplicateFrame: return "DUPLICATE_FRAME";
    case ErrorCode::kEmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::kPreconditionViolated: return "PRECONDITION_VIOLATED";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kNestedMarkers: return "NESTED_MARKERS";
    case ErrorCode::kMultipleAnswerBlocks: return "MULTIPLE_ANSWER_BLOCKS";
    case ErrorCode::kUnparseableTag: return "UNPARSEABLE_TAG";
    case ErrorCode::kAuthFailed: return "AUTH_FAILED";
    case ErrorCode::kBudgetExceeded: return "BUDGET_EXCEEDED";
    case ErrorCode::kExhaustedRetries: return "EXHAUSTED_RETRIES";
    case ErrorCode::kTransportError: return "TRANSPORT_ERROR";
    case ErrorCode::kGenerationFailed: return "GENERATION_FAILED";
    case ErrorCode::kSentenceBudgetExceeded: return "SENTENCE_BUDGET_EXCEEDED";
    case ErrorCode::kSentenceBudgetShort: return "SENTENCE_BUDGET_SHORT";
    case ErrorCode::kMissingChain: return "MISSING_CHAIN";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kEmptyEvalSet: return "EMPTY_EVAL_SET";
    case ErrorCode::kWeightsInvalid: return "WEIGHTS_INVALID";
    case ErrorCode::kMalformedPredictions: return "MALFORMED_PREDICTIONS";
    case ErrorCode::kUnknownQaId: return "UNKNOWN_QA_ID";
    case ErrorCode::kDuplicateQaId: return "DUPLICATE_QA_ID";
    case ErrorCode::kMissingPrediction: return "MISSING_PREDICTION";
    case ErrorCode::kJudgeUnparseable: return "JUDGE_UNPARSEABLE";
  }
  return "UNKNOWN";
}

namespace {

std::optional<ErrorCode> ParseErrorCode(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kJudgeUnparseable); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (ToString(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace

std::string_view ToString(Severity severity) {
  return severity == Severity::kError ? "error" : "warning";
}

json ToJson(const Finding& finding) {
  return json{{"severity", ToString(finding.severity)},
              {"code", ToString(finding.code)},
              {"subject", finding.subject},
              {"message", finding.message}};
}

Finding FindingFromJson(const json& j) {
  Finding f;
  f.severity = j.at("severity").get<std::string>() == "warning"
                   ? Severity::kWarning
                   : Severity::kError;
  auto code = ParseErrorCode(j.at("code").get<std::string>());
  if (!code) {
    throw Error(ErrorCode::kInvalidRecord,
                "unknown finding code " + j.at("code").get<std::string>());
  }
  f.code = *code;
  f.subject = j.value("subject", "");
  f.message = j.value("message", "");
  return f;
}

// ---------------------------------------------------------------------------

const std::array<CameraView, kNumCameraViews>& canonical_view_order() {
  static constexpr std::array<CameraView, kNumCameraViews> kOrder = {
      CameraView::kFront, CameraView::kFrontLeft, CameraView::kFrontRight,
      CameraView::kBack,  CameraView::kBackLeft,  CameraView::kBackRight};
  return kOrder;
}

std::string_view ToString(CameraView view) {
  return ToCamName(view).substr(4);
}

std::string_view ToCamName(CameraView view) {
  switch (view) {
    case CameraView::kFront: return "CAM_FRONT";
    case CameraView::kFrontLeft: return "CAM_FRONT_LEFT";
    case CameraView::kFrontRight: return "CAM_FRONT_RIGHT";
    case CameraView::kBack: return "CAM_BACK";
    case CameraView::kBackLeft: return "CAM_BACK_LEFT";
    case CameraView::kBackRight: return "CAM_BACK_RIGHT";
  }
  return "CAM_FRONT";
}

std::optional<CameraView> ParseCameraView(std::string_view name) {
  for (CameraView view : canonical_view_order()) {
    if (name == ToString(view) || name == ToCamName(view)) return view;
  }
  return std::nullopt;
}

std::string_view ToString(TaskCategory category) {
  switch (category) {
    case TaskCategory::kPerception: return "perception";
    case TaskCategory::kPrediction: return "prediction";
    case TaskCategory::kPlanning: return "planning";
    case TaskCategory::kBehavior: return "behavior";
  }
  return "perception";
}

std::string_view DisplayName(TaskCategory category) {
  switch (category) {
    case TaskCategory::kPerception: return "Perception";
    case TaskCategory::kPrediction: return "Prediction";
    case TaskCategory::kPlanning: return "Planning";
    case TaskCategory::kBehavior: return "Behavior";
  }
  return "Perception";
}

std::optional<TaskCategory> ParseTaskCategory(std::string_view name) {
  const std::string key = Lower(Trim(name));
  for (TaskCategory category : kAllCategories) {
    if (key == ToString(category)) return category;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<std::string> Frame::image_paths() const {
  std::vector<std::string> paths;
  paths.reserve(kNumCameraViews);
  for (CameraView view : canonical_view_order()) {
    auto it = views.find(view);
    if (it == views.end()) {
      throw Error(ErrorCode::kMissingView,
                  key() + " has no " + std::string(ToString(view)) + " view");
    }
    paths.push_back(it->second);
  }
  return paths;
}

std::vector<Finding> validate_frame(const Frame& frame,
                                    const std::filesystem::path& dataset_root) {
  std::vector<Finding> findings;
  for (CameraView view : canonical_view_order()) {
    auto it = frame.views.find(view);
    if (it == frame.views.end()) {
      findings.push_back({Severity::kError, ErrorCode::kMissingView,
                          std::string(ToString(view)),
                          frame.key() + " lacks the " +
                              std::string(ToString(view)) + " view"});
      continue;
    }
    std::error_code ec;
    if (!std::filesystem::is_regular_file(dataset_root / it->second, ec)) {
      findings.push_back({Severity::kError, ErrorCode::kFileNotFound,
                          it->second,
                          frame.key() + " " + std::string(ToString(view)) +
                              " image does not exist"});
    }
  }
  if (frame.scene_id.empty() || frame.frame_id.empty()) {
    findings.push_back({Severity::kError, ErrorCode::kInvalidRecord,
                        frame.key(), "frame has an empty scene or frame id"});
  }
  return findings;
}

// ---------------------------------------------------------------------------

bool IsValidTagId(std::string_view id) {
  if (id.size() < 2 || id[0] != 'c') return false;
  if (id[1] == '0') return false;
  return std::all_of(id.begin() + 1, id.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

// ---------------------------------------------------------------------------

QaRecord QaRecord::Create(std::string qa_id, std::string scene_id,
                          std::string frame_id, TaskCategory category,
                          std::string question, std::string gt_answer) {
  QaRecord r;
  r.qa_id_ = std::move(qa_id);
  r.scene_id_ = std::move(scene_id);
  r.frame_id_ = std::move(frame_id);
  r.category_ = category;
  r.question_ = std::string(Trim(question));
  r.gt_answer_ = std::string(Trim(gt_answer));
  if (r.qa_id_.empty()) {
    throw Error(ErrorCode::kInvalidRecord, "empty qa_id");
  }
  if (r.question_.empty()) {
    throw Error(ErrorCode::kInvalidRecord, r.qa_id_ + " has an empty question");
  }
  if (r.gt_answer_.empty()) {
    throw Error(ErrorCode::kInvalidRecord, r.qa_id_ + " has an empty answer");
  }
  r.gt_tags_ = extract_tags(r.gt_answer_);
  return r;
}

json ToJson(const QaRecord& record) {
  return json{{"qa_id", record.qa_id()},
              {"scene_id", record.scene_id()},
              {"frame_id", record.frame_id()},
              {"category", ToString(record.category())},
              {"question", record.question()},
              {"answer", record.gt_answer()}};
}

QaRecord QaRecordFromJson(const json& j) {
  const auto category_name = j.at("category").get<std::string>();
  auto category = ParseTaskCategory(category_name);
  if (!category) {
    throw Error(ErrorCode::kUnknownCategory, category_name);
  }
  return QaRecord::Create(
      j.at("qa_id").get<std::string>(), j.at("scene_id").get<std::string>(),
      j.at("frame_id").get<std::string>(), *category,
      j.at("question").get<std::string>(), j.at("answer").get<std::string>());
}

// ---------------------------------------------------------------------------

namespace {

bool IsTerminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool IsCloser(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']';
}

// Token that ends at `end` (exclusive), scanning back to whitespace.
std::string_view WordBefore(std::string_view text, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && !IsSpace(text[begin - 1])) --begin;
  return text.substr(begin, end - begin);
}

bool IsNonBreakingWord(std::string_view word) {
  if (word.empty()) return false;
  std::string_view core = word;
  while (!core.empty() && (core.front() == '(' || core.front() == '"')) {
    core.remove_prefix(1);
  }
  // Enumeration markers: "1." "12."
  if (!core.empty() &&
      std::all_of(core.begin(), core.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      })) {
    return true;
  }
  static const std::array<std::string_view, 7> kAbbreviations = {
      "e.g", "i.e", "vs", "mr", "mrs", "dr", "approx"};
  const std::string lower = Lower(core);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) !=
         kAbbreviations.end();
}

}  // namespace

int count_sentences(std::string_view text) {
  int count = 0;
  bool has_content = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (!IsTerminator(c)) {
      if (!IsSpace(c)) has_content = true;
      ++i;
      continue;
    }
    const std::size_t run_begin = i;
    while (i < text.size() && IsTerminator(text[i])) ++i;
    while (i < text.size() && IsCloser(text[i])) ++i;
    const bool at_boundary = i == text.size() || IsSpace(text[i]);
    if (!at_boundary) {
      has_content = true;
      continue;
    }
    if (text[run_begin] == '.' && i == run_begin + 1 &&
        IsNonBreakingWord(WordBefore(text, run_begin))) {
      continue;
    }
    if (has_content) {
      ++count;
      has_content = false;
    }
  }
  if (has_content) ++count;
  return count;
}

ReasoningChain ReasoningChain::Create(std::string text, TaskCategory category,
                                      std::string source_model) {
  ReasoningChain chain;
  chain.text_ = std::string(Trim(text));
  chain.category_ = category;
  chain.source_model_ = std::move(source_model);
  if (chain.text_.empty()) {
    throw Error(ErrorCode::kInvalidRecord, "empty reasoning chain");
  }
  chain.sentence_count_ = count_sentences(chain.text_);
  if (chain.sentence_count_ < 1) {
    throw Error(ErrorCode::kInvalidRecord,
                "reasoning chain has no sentence: " + chain.text_);
  }
  return chain;
}

json ToJson(const ReasoningChain& chain) {
  return json{{"text", chain.text()},
              {"sentence_count", chain.sentence_count()},
              {"category", ToString(chain.category())},
              {"source_model", chain.source_model()}};
}

ReasoningChain ReasoningChainFromJson(const json& j) {
  const auto name = j.at("category").get<std::string>();
  auto category = ParseTaskCategory(name);
  if (!category) throw Error(ErrorCode::kUnknownCategory, name);
  return ReasoningChain::Create(j.at("text").get<std::string>(), *category,
                                j.value("source_model", ""));
}

// ---------------------------------------------------------------------------

std::string_view ToString(Variant variant) {
  return variant == Variant::kReason ? "reason" : "simple";
}

std::optional<Variant> ParseVariant(std::string_view name) {
  const std::string key = Lower(Trim(name));
  if (key == "reason") return Variant::kReason;
  if (key == "simple") return Variant::kSimple;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void ValidateWeights(const FinalWeights& w) {
  const double parts[] = {w.judge, w.language, w.match, w.accuracy};
  double sum = 0.0;
  for (double p : parts) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kWeightsInvalid, "weights must be >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kWeightsInvalid,
                "weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

void MetricConfig::Validate() const {
  if (bleu_max_order < 1) {
    throw Error(ErrorCode::kInvalidConfig, "bleu_max_order must be >= 1");
  }
  if (cider_max_order < 1) {
    throw Error(ErrorCode::kInvalidConfig, "cider_max_order must be >= 1");
  }
  if (!(rouge_beta > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "rouge_beta must be > 0");
  }
  if (!(cider_sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "cider_sigma must be > 0");
  }
  if (!(cider_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "cider_scale must be > 0");
  }
  if (bleu_smoothing_epsilon < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "smoothing epsilon must be >= 0");
  }
  ValidateWeights(final_weights);
}

json ToJson(const FinalWeights& w) {
  return json{{"judge", w.judge},
              {"language", w.language},
              {"match", w.match},
              {"accuracy", w.accuracy}};
}

FinalWeights FinalWeightsFromJson(const json& j) {
  FinalWeights w;
  w.judge = j.value("judge", w.judge);
  w.language = j.value("language", w.language);
  w.match = j.value("match", w.match);
  w.accuracy = j.value("accuracy", w.accuracy);
  return w;
}

json ToJson(const MetricConfig& c) {
  return json{{"bleu_max_order", c.bleu_max_order},
              {"bleu_smoothing_epsilon", c.bleu_smoothing_epsilon},
              {"rouge_beta", c.rouge_beta},
              {"cider_max_order", c.cider_max_order},
              {"cider_sigma", c.cider_sigma},
              {"cider_scale", c.cider_scale},
              {"final_weights", ToJson(c.final_weights)}};
}

MetricConfig MetricConfigFromJson(const json& j) {
  MetricConfig c;
  c.bleu_max_order = j.value("bleu_max_order", c.bleu_max_order);
  c.bleu_smoothing_epsilon =
      j.value("bleu_smoothing_epsilon", c.bleu_smoothing_epsilon);
  c.rouge_beta = j.value("rouge_beta", c.rouge_beta);
  c.cider_max_order = j.value("cider_max_order", c.cider_max_order);
  c.cider_sigma = j.value("cider_sigma", c.cider_sigma);
  c.cider_scale = j.value("cider_scale", c.cider_scale);
  if (j.contains("final_weights")) {
    c.final_weights = FinalWeightsFromJson(j.at("final_weights"));
  }
  return c;
}

std::string_view Trim(std::string_view text) {
  while (!text.empty() && IsSpace(text.front())) text.remove_prefix(1);
  while (!text.empty() && IsSpace(text.back())) text.remove_suffix(1);
  return text;
}

}  // namespace reasondrive
