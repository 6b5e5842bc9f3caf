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

// Evaluation harness: predictions in, scores.json and report.md out.
//
// Predictions are JSONL, one {"id": <qa_id>, "output": <raw model text>}
// per line. Outputs are parsed with the tag protocol and only the answer
// segment is scored.

#ifndef REASONDRIVE_HARNESS_HPP_
#define REASONDRIVE_HARNESS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reasondrive/config.hpp"
#include "reasondrive/core.hpp"
#include "reasondrive/gateway.hpp"
#include "reasondrive/ingest.hpp"
#include "reasondrive/metrics.hpp"
#include "reasondrive/prompt_forge.hpp"
#include "reasondrive/tag_codec.hpp"

namespace reasondrive {

struct PredictionEntry {
  std::string qa_id;
  std::string output;
};

// Throws kMalformedPredictions (with the line number) for unreadable lines.
std::vector<PredictionEntry> read_predictions(const std::filesystem::path& path);
std::vector<PredictionEntry> parse_predictions(std::string_view jsonl);

struct LoadedPredictions {
  std::vector<EvalPair> pairs;  // dataset record order
  std::map<ParseMode, std::size_t> parse_modes;
  std::vector<std::string> unknown_ids;    // not in the dataset, ignored
  std::vector<std::string> duplicate_ids;  // first occurrence is kept
  std::vector<std::string> missing_ids;    // dataset records without output
  std::vector<Finding> findings;
};

LoadedPredictions match_predictions(const std::vector<PredictionEntry>& entries,
                                    const Dataset& dataset);

// First integer in [0, 100] in the reply ("Score: 92/100." gives 92).
std::optional<int> parse_judge_score(std::string_view reply);

struct JudgeVerdict {
  std::string qa_id;
  int score = 0;
  std::string reply;  // last raw reply
  int requests = 0;
  std::vector<Finding> findings;
};

// One verdict per pair, aligned with pairs. A reply without a usable score
// is re-requested up to options.max_reparses times, then scored 0 with a
// JUDGE_UNPARSEABLE finding. Auth and budget errors abort; other gateway
// failures score 0 with the gateway error as a finding.
std::vector<JudgeVerdict> judge_pairs(const std::vector<EvalPair>& pairs,
                                      const Dataset& dataset, Gateway& gateway,
                                      const PromptLibrary& prompts,
                                      const JudgeOptions& options);

nlohmann::json ToJson(const JudgeVerdict& verdict);

struct MetricReport {
  std::string model_name;
  CorpusScores overall;
  std::map<TaskCategory, CorpusScores> by_category;
  MetricConfig config;
  std::map<ParseMode, std::size_t> parse_modes;
  std::vector<std::string> unknown_ids;
  std::vector<std::string> missing_ids;
  std::vector<Finding> findings;
  std::string dataset_digest;
  std::string predictions_digest;
};

// verdicts, when given, align with predictions.pairs. Throws kEmptyEvalSet
// when nothing can be scored.
MetricReport evaluate(const Dataset& dataset, const LoadedPredictions& predictions,
                      const MetricConfig& config,
                      const std::vector<JudgeVerdict>* verdicts);

// Stable across runs for the same inputs (no timestamps).
nlohmann::json ToJson(const MetricReport& report);
MetricReport MetricReportFromJson(const nlohmann::json& j);

// Columns of the score table, after the leading row label.
const std::vector<std::string>& report_columns();
std::string render_markdown(const MetricReport& report);

// Digest of the records (ids, questions, answers) a report was scored on.
std::string dataset_digest(const Dataset& dataset);

// Writes scores.json, report.md and, when given, verdicts.json under dir.
void write_run(const std::filesystem::path& dir, const MetricReport& report,
               const std::vector<JudgeVerdict>* verdicts);

// Reads dir/scores.json. Throws kIoError when absent.
MetricReport read_run(const std::filesystem::path& dir);

}  // namespace reasondrive

#endif  // REASONDRIVE_HARNESS_HPP_
