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

// Prompt construction for reasoning-chain generation, inference and judging.
//
// Every piece of wording has an embedded default and can be overridden from
// a template directory holding any of these plain-text files:
//
//   preamble.txt          reasoning preamble; "{category}" is substituted
//   perception.txt ...    one focus line per line, per category
//   system.txt            driving-assistant system prompt
//   inference_reason.txt  instruction appended for the reason variant
//   inference_simple.txt  instruction appended for the simple variant
//   judge_system.txt      judge role line
//   judge_user.txt        judge body; {question} {reference} {candidate}

#ifndef REASONDRIVE_PROMPT_FORGE_HPP_
#define REASONDRIVE_PROMPT_FORGE_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasondrive/chat_message.hpp"
#include "reasondrive/core.hpp"

namespace reasondrive {

struct SentenceBudget {
  int min = 1;
  int max = 1;

  bool Contains(int n) const { return n >= min && n <= max; }
  bool operator==(const SentenceBudget&) const = default;
};

// Finds "using N sentence(s)" or "using N-M [concise] sentences".
std::optional<SentenceBudget> ParseSentenceBudget(std::string_view text);

struct PromptTemplate {
  TaskCategory category = TaskCategory::kPerception;
  std::vector<std::string> focus_lines;
  SentenceBudget sentence_budget;
  std::string system_preamble;  // category already substituted

  // Preamble, blank line, then the focus lines as "- " bullets.
  std::string RenderSystem() const;
};

class PromptLibrary {
 public:
  static PromptLibrary Defaults();
  // Defaults overridden by whichever template files the directory holds.
  static PromptLibrary FromDirectory(const std::filesystem::path& dir);

  const PromptTemplate& reasoning_template(TaskCategory category) const;
  const std::string& system_prompt() const { return system_prompt_; }
  void set_system_prompt(std::string prompt) { system_prompt_ = std::move(prompt); }

  // System message with the category template; user message with question,
  // ground-truth answer and the six views (canonical order, resolved against
  // image_root).
  std::vector<ChatMessage> build_reasoning_prompt(
      const QaRecord& record, const Frame& frame,
      const std::filesystem::path& image_root) const;

  // Never includes the ground-truth answer.
  std::vector<ChatMessage> build_inference_prompt(
      const QaRecord& record, const Frame& frame,
      const std::filesystem::path& image_root, Variant variant) const;

  std::vector<ChatMessage> build_judge_prompt(std::string_view question,
                                              std::string_view reference,
                                              std::string_view candidate) const;

 private:
  std::string preamble_;
  std::array<std::vector<std::string>, 4> focus_lines_;
  std::array<PromptTemplate, 4> templates_;
  std::string system_prompt_;
  std::string inference_reason_;
  std::string inference_simple_;
  std::string judge_system_;
  std::string judge_user_;

  void Rebuild();
};

std::string ReplaceAll(std::string text, std::string_view from,
                       std::string_view to);

}  // namespace reasondrive

#endif  // REASONDRIVE_PROMPT_FORGE_HPP_
