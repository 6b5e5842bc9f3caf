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

#include "reasondrive/chain_assembler.hpp"

#include <unordered_map>

#include <spdlog/spdlog.h>

#include "reasondrive/hashing.hpp"
#include "reasondrive/tag_codec.hpp"

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view ToString(GenerationStatus status) {
  switch (status) {
    case GenerationStatus::kOk: return "OK";
    case GenerationStatus::kRetriedOk: return "RETRIED_OK";
    case GenerationStatus::kFailed: return "FAILED";
  }
  return "FAILED";
}

namespace {

GenerationStatus ParseStatus(const std::string& name) {
  if (name == "OK") return GenerationStatus::kOk;
  if (name == "RETRIED_OK") return GenerationStatus::kRetriedOk;
  if (name == "FAILED") return GenerationStatus::kFailed;
  throw Error(ErrorCode::kInvalidRecord, "unknown generation status " + name);
}

std::unordered_map<std::string, const Frame*> IndexFrames(
    const std::vector<Frame>& frames) {
  std::unordered_map<std::string, const Frame*> index;
  for (const Frame& f : frames) index.emplace(f.key(), &f);
  return index;
}

// The think text when it can serve as a chain, nullopt otherwise.
std::optional<std::string> UsableThink(const std::string& text) {
  if (Trim(text).empty()) return std::nullopt;
  const ParsedOutput parsed = parse_structured(text);
  if (!parsed.think) return std::nullopt;
  const std::string_view think = Trim(*parsed.think);
  if (think.empty() || contains_marker(think) || count_sentences(think) < 1) {
    return std::nullopt;
  }
  return std::string(think);
}

}  // namespace

json ToJson(const GenerationOutcome& o) {
  json findings = json::array();
  for (const Finding& f : o.findings) findings.push_back(ToJson(f));
  return json{{"qa_id", o.qa_id},
              {"status", ToString(o.status)},
              {"chain", o.chain ? ToJson(*o.chain) : json(nullptr)},
              {"attempts", o.attempts},
              {"findings", findings},
              {"usage", ToJson(o.usage)}};
}

GenerationOutcome GenerationOutcomeFromJson(const json& j) {
  GenerationOutcome o;
  o.qa_id = j.at("qa_id").get<std::string>();
  o.status = ParseStatus(j.at("status").get<std::string>());
  if (j.contains("chain") && !j.at("chain").is_null()) {
    o.chain = ReasoningChainFromJson(j.at("chain"));
  }
  o.attempts = j.value("attempts", 0);
  for (const json& f : j.value("findings", json::array())) {
    o.findings.push_back(FindingFromJson(f));
  }
  o.usage = UsageFromJson(j.value("usage", json::object()));
  if ((o.status == GenerationStatus::kFailed) == o.chain.has_value()) {
    throw Error(ErrorCode::kInvalidRecord,
                o.qa_id + ": chain presence disagrees with status");
  }
  return o;
}

// ---------------------------------------------------------------------------

ChainGenerator::ChainGenerator(Gateway& gateway, const PromptLibrary& prompts,
                               GenerationOptions options)
    : gateway_(gateway), prompts_(prompts), options_(std::move(options)) {
  if (options_.max_regenerations < 0 || options_.max_in_flight < 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "max_regenerations must be >= 0 and max_in_flight >= 1");
  }
}

std::vector<GenerationOutcome> ChainGenerator::generate(
    const std::vector<QaRecord>& records, const std::vector<Frame>& frames,
    const fs::path& image_root) const {
  const auto frame_index = IndexFrames(frames);
  std::vector<GenerationOutcome> outcomes(records.size());
  std::vector<CompletionRequest> requests(records.size());
  std::vector<std::size_t> pending;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const QaRecord& record = records[i];
    outcomes[i].qa_id = record.qa_id();
    auto it = frame_index.find(record.frame_key());
    try {
      if (it == frame_index.end()) {
        throw Error(ErrorCode::kMissingView, "no frame " + record.frame_key());
      }
      requests[i] = CompletionRequest{
          options_.model,
          prompts_.build_reasoning_prompt(record, *it->second, image_root),
          options_.temperature, options_.max_tokens};
      pending.push_back(i);
    } catch (const Error& e) {
      outcomes[i].findings.push_back(
          {Severity::kError, e.code(), record.qa_id(), e.detail()});
    }
  }

  for (int round = 0; round <= options_.max_regenerations && !pending.empty();
       ++round) {
    std::vector<CompletionRequest> batch;
    batch.reserve(pending.size());
    for (std::size_t i : pending) batch.push_back(requests[i]);
    const auto items = gateway_.complete_batch(
        batch, options_.max_in_flight, CallOptions{.refresh = round > 0});

    std::vector<std::size_t> retry;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const std::size_t i = pending[k];
      GenerationOutcome& outcome = outcomes[i];
      const QaRecord& record = records[i];
      ++outcome.attempts;
      if (!items[k].ok()) {
        const Error& e = *items[k].error;
        if (e.code() == ErrorCode::kAuthFailed ||
            e.code() == ErrorCode::kBudgetExceeded) {
          throw e;
        }
        outcome.findings.push_back(
            {Severity::kError, e.code(), record.qa_id(), e.detail()});
        continue;
      }
      const CompletionResult& result = *items[k].result;
      if (!result.from_cache) outcome.usage += result.usage;

      auto think = UsableThink(result.text);
      if (!think) {
        spdlog::debug("{}: response has no usable reasoning (attempt {})",
                      record.qa_id(), outcome.attempts);
        retry.push_back(i);
        continue;
      }
      outcome.chain = ReasoningChain::Create(std::move(*think), record.category(),
                                             options_.model);
      outcome.status = round == 0 ? GenerationStatus::kOk
                                  : GenerationStatus::kRetriedOk;
      const SentenceBudget budget =
          prompts_.reasoning_template(record.category()).sentence_budget;
      const int n = outcome.chain->sentence_count();
      if (n > budget.max) {
        outcome.findings.push_back(
            {Severity::kWarning, ErrorCode::kSentenceBudgetExceeded,
             record.qa_id(),
             std::to_string(n) + " sentences, budget " +
                 std::to_string(budget.min) + "-" + std::to_string(budget.max)});
      } else if (n < budget.min) {
        outcome.findings.push_back(
            {Severity::kWarning, ErrorCode::kSentenceBudgetShort,
             record.qa_id(),
             std::to_string(n) + " sentences, budget " +
                 std::to_string(budget.min) + "-" + std::to_string(budget.max)});
      }
    }
    pending = std::move(retry);
  }

  for (std::size_t i : pending) {
    outcomes[i].findings.push_back(
        {Severity::kError, ErrorCode::kGenerationFailed, outcomes[i].qa_id,
         "no usable reasoning after " + std::to_string(outcomes[i].attempts) +
             " attempts"});
  }
  return outcomes;
}

GenerationOutcome ChainGenerator::generate_chain(const QaRecord& record,
                                                 const Frame& frame,
                                                 const fs::path& image_root) const {
  return generate({record}, {frame}, image_root).front();
}

// ---------------------------------------------------------------------------

GenerationSummary summarize(const std::vector<GenerationOutcome>& outcomes,
                            const std::vector<QaRecord>& records) {
  std::unordered_map<std::string, TaskCategory> categories;
  for (const QaRecord& r : records) categories.emplace(r.qa_id(), r.category());

  GenerationSummary s;
  for (const GenerationOutcome& o : outcomes) {
    switch (o.status) {
      case GenerationStatus::kOk: ++s.ok; break;
      case GenerationStatus::kRetriedOk: ++s.retried; break;
      case GenerationStatus::kFailed:
        ++s.failed;
        s.failed_ids.push_back(o.qa_id);
        break;
    }
    if (auto it = categories.find(o.qa_id); it != categories.end()) {
      ++s.by_category[it->second][o.status];
    }
    for (const Finding& f : o.findings) {
      if (f.code == ErrorCode::kSentenceBudgetExceeded ||
          f.code == ErrorCode::kSentenceBudgetShort) {
        ++s.budget_warnings;
      }
    }
    s.usage += o.usage;
  }
  return s;
}

json ToJson(const GenerationSummary& s) {
  json by_category = json::object();
  for (TaskCategory c : kAllCategories) {
    json counts{{"ok", 0}, {"retried", 0}, {"failed", 0}};
    if (auto it = s.by_category.find(c); it != s.by_category.end()) {
      for (const auto& [status, n] : it->second) {
        const char* key = status == GenerationStatus::kOk        ? "ok"
                          : status == GenerationStatus::kRetriedOk ? "retried"
                                                                   : "failed";
        counts[key] = n;
      }
    }
    by_category[std::string(ToString(c))] = counts;
  }
  return json{{"counts", {{"ok", s.ok}, {"retried", s.retried}, {"failed", s.failed}}},
              {"by_category", by_category},
              {"budget_warnings", s.budget_warnings},
              {"failed_ids", s.failed_ids},
              {"usage", ToJson(s.usage)}};
}

// ---------------------------------------------------------------------------

std::vector<TrainingExample> assemble_examples(
    const std::vector<QaRecord>& records, const std::vector<Frame>& frames,
    const std::vector<GenerationOutcome>& outcomes, Variant variant,
    const std::string& system_prompt) {
  const auto frame_index = IndexFrames(frames);
  std::unordered_map<std::string, const GenerationOutcome*> by_id;
  for (const GenerationOutcome& o : outcomes) by_id[o.qa_id] = &o;

  if (variant == Variant::kReason) {
    std::string missing;
    for (const QaRecord& r : records) {
      auto it = by_id.find(r.qa_id());
      if (it == by_id.end() || !it->second->chain) {
        if (!missing.empty()) missing += ", ";
        missing += r.qa_id();
      }
    }
    if (!missing.empty()) throw Error(ErrorCode::kMissingChain, missing);
  }

  std::vector<TrainingExample> examples;
  examples.reserve(records.size());
  for (const QaRecord& r : records) {
    auto frame = frame_index.find(r.frame_key());
    if (frame == frame_index.end()) {
      throw Error(ErrorCode::kMissingView, "no frame " + r.frame_key());
    }
    TrainingExample ex;
    ex.system_prompt = system_prompt;
    ex.question = r.question();
    ex.answer = r.gt_answer();
    ex.image_paths = frame->second->image_paths();
    ex.meta = ExampleMeta{r.qa_id(),    r.scene_id(), r.frame_id(),
                          r.category(), r.question(), r.gt_answer()};
    if (variant == Variant::kReason) ex.reasoning = by_id.at(r.qa_id())->chain;
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::string training_target(const TrainingExample& example, Variant variant) {
  if (variant == Variant::kReason) {
    if (!example.reasoning) {
      throw Error(ErrorCode::kMissingChain, example.meta.qa_id);
    }
    return emit_structured(example.reasoning->text(), example.answer);
  }
  return emit_structured(std::nullopt, example.answer);
}

json ToJsonLine(const TrainingExample& example, Variant variant) {
  const ExampleMeta& m = example.meta;
  return json{
      {"id", m.qa_id},
      {"images", example.image_paths},
      {"conversations",
       json::array({{{"role", "system"}, {"text", example.system_prompt}},
                    {{"role", "user"}, {"text", example.question}},
                    {{"role", "assistant"},
                     {"text", training_target(example, variant)}}})},
      {"meta",
       {{"qa_id", m.qa_id},
        {"scene_id", m.scene_id},
        {"frame_id", m.frame_id},
        {"category", ToString(m.category)},
        {"question", m.original_question},
        {"answer", m.original_answer}}}};
}

ExportSummary export_training_file(const std::vector<TrainingExample>& examples,
                                   Variant variant, const fs::path& out) {
  std::string content;
  for (const TrainingExample& ex : examples) {
    content += ToJsonLine(ex, variant).dump();
    content += '\n';
  }
  WriteFileAtomic(out, content);
  ExportSummary s;
  s.path = out;
  s.variant = variant;
  s.lines = examples.size();
  s.digest = Sha256Hex(content);
  return s;
}

json ToJson(const ExportSummary& s) {
  return json{{"path", s.path.string()},
              {"variant", ToString(s.variant)},
              {"lines", s.lines},
              {"digest", s.digest},
              {"excluded_ids", s.excluded_ids}};
}

}  // namespace reasondrive
