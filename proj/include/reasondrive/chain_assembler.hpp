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

// Reasoning-chain generation and training-file export.
//
// Exported JSONL record (one per line, UTF-8, "\n" separated):
//   {"id": qa_id,
//    "images": [six paths, canonical view order],
//    "conversations": [{"role":"system","text":...},
//                      {"role":"user","text":question},
//                      {"role":"assistant","text":target}],
//    "meta": {"qa_id","scene_id","frame_id","category","question","answer"}}
// The reason target carries <think> and <answer>; the simple target only
// <answer>.

#ifndef REASONDRIVE_CHAIN_ASSEMBLER_HPP_
#define REASONDRIVE_CHAIN_ASSEMBLER_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasondrive/core.hpp"
#include "reasondrive/gateway.hpp"
#include "reasondrive/ingest.hpp"
#include "reasondrive/prompt_forge.hpp"

namespace reasondrive {

enum class GenerationStatus { kOk, kRetriedOk, kFailed };

std::string_view ToString(GenerationStatus status);

struct GenerationOutcome {
  std::string qa_id;
  GenerationStatus status = GenerationStatus::kFailed;
  std::optional<ReasoningChain> chain;  // set iff status is not kFailed
  int attempts = 0;
  std::vector<Finding> findings;
  Usage usage;
};

nlohmann::json ToJson(const GenerationOutcome& outcome);
GenerationOutcome GenerationOutcomeFromJson(const nlohmann::json& j);

struct GenerationOptions {
  std::string model = "gpt-4o";
  double temperature = 0.7;
  int max_tokens = 512;
  int max_regenerations = 2;  // attempts = 1 + max_regenerations
  int max_in_flight = 4;
};

class ChainGenerator {
 public:
  ChainGenerator(Gateway& gateway, const PromptLibrary& prompts,
                 GenerationOptions options);

  // Outcomes align with `records`. Unusable responses (no think segment, or
  // a think segment carrying protocol markers) are regenerated; sentence
  // budget violations only add warnings. kAuthFailed and kBudgetExceeded
  // abort the whole run; other gateway errors fail the record.
  std::vector<GenerationOutcome> generate(
      const std::vector<QaRecord>& records, const std::vector<Frame>& frames,
      const std::filesystem::path& image_root) const;

  GenerationOutcome generate_chain(const QaRecord& record, const Frame& frame,
                                   const std::filesystem::path& image_root) const;

 private:
  Gateway& gateway_;
  const PromptLibrary& prompts_;
  GenerationOptions options_;
};

struct GenerationSummary {
  std::size_t ok = 0;
  std::size_t retried = 0;
  std::size_t failed = 0;
  std::map<TaskCategory, std::map<GenerationStatus, std::size_t>> by_category;
  std::size_t budget_warnings = 0;
  std::vector<std::string> failed_ids;
  Usage usage;
};

GenerationSummary summarize(const std::vector<GenerationOutcome>& outcomes,
                            const std::vector<QaRecord>& records);
nlohmann::json ToJson(const GenerationSummary& summary);

// Throws kMissingChain (naming every affected qa_id) when variant is kReason
// and a record has no successful outcome. Records without a frame throw
// kMissingView.
std::vector<TrainingExample> assemble_examples(
    const std::vector<QaRecord>& records, const std::vector<Frame>& frames,
    const std::vector<GenerationOutcome>& outcomes, Variant variant,
    const std::string& system_prompt);

struct ExportSummary {
  std::filesystem::path path;
  Variant variant = Variant::kReason;
  std::size_t lines = 0;
  std::string digest;  // SHA-256 of the file bytes
  std::vector<std::string> excluded_ids;
};

nlohmann::json ToJson(const ExportSummary& summary);

// The assistant target for one example.
std::string training_target(const TrainingExample& example, Variant variant);

nlohmann::json ToJsonLine(const TrainingExample& example, Variant variant);

// Throws kIoError.
ExportSummary export_training_file(const std::vector<TrainingExample>& examples,
                                   Variant variant,
                                   const std::filesystem::path& out);

}  // namespace reasondrive

#endif  // REASONDRIVE_CHAIN_ASSEMBLER_HPP_
