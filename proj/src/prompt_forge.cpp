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

#include "reasondrive/prompt_forge.hpp"

#include <fstream>
#include <regex>
#include <sstream>

namespace reasondrive {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kDefaultPreamble =
    "You are assisting in developing a reasoning system for an autonomous "
    "driving AI. Below is a question and answer pair from the '{category}' "
    "category. Your task is to generate a structured, step-by-step reasoning "
    "process that logically leads to the provided answer.";

const std::array<std::vector<std::string>, 4>& DefaultFocusLines() {
  static const std::array<std::vector<std::string>, 4> kLines = {{
      {"Quickly summarize the observed scene",
       "Identify key objects and their positions",
       "Note immediate visual cues and statuses",
       "Format response within <think> tags using 1 concise sentence"},
      {"Concisely forecast future states based on current data",
       "Consider object motion, momentum, and interactions",
       "Apply basic traffic rules and driver behavior",
       "Format response within <think> tags using 1-2 sentences"},
      {"Assess safety and prioritize actions",
       "Evaluate decision options and trade-offs",
       "Consider alternative actions and consequences",
       "Format response within <think> tags using 2-3 sentences"},
      {"Analyze motion patterns, speed, and trajectories",
       "Consider environmental factors and multi-view observations",
       "Determine the underlying intent based on dynamic context",
       "Format response within <think> tags using 1-2 concise sentences"},
  }};
  return kLines;
}

constexpr SentenceBudget kDefaultBudgets[4] = {{1, 1}, {1, 2}, {2, 3}, {1, 2}};

constexpr std::string_view kDefaultSystemPrompt =
    "You are a driving assistant. Analyze the six camera views and answer the "
    "question.";

constexpr std::string_view kDefaultInferenceReason =
    "Provide your thinking within <think> </think> tags, then give your final "
    "answer within <answer> </answer> tags.";

constexpr std::string_view kDefaultInferenceSimple =
    "Respond with the final answer directly, without explanation.";

constexpr std::string_view kDefaultJudgeSystem =
    "You are an impartial judge evaluating answers to driving-scene "
    "questions against a ground-truth answer.";

constexpr std::string_view kDefaultJudgeUser =
    "Question: {question}\n"
    "Ground-truth answer: {reference}\n"
    "Model answer: {candidate}\n\n"
    "Rate the model answer from 0 to 100. Reply with the number first.";

std::size_t Index(TaskCategory c) { return static_cast<std::size_t>(c); }

std::optional<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string TrimmedOwned(std::string_view s) { return std::string(Trim(s)); }

std::vector<std::string> ParseFocusLines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = Trim(line);
    if (view.starts_with("- ")) view.remove_prefix(2);
    view = Trim(view);
    if (!view.empty()) lines.emplace_back(view);
  }
  return lines;
}

}  // namespace

std::string ReplaceAll(std::string text, std::string_view from,
                       std::string_view to) {
  if (from.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::optional<SentenceBudget> ParseSentenceBudget(std::string_view text) {
  static const std::regex kPattern(
      R"(using\s+(\d+)(?:\s*-\s*(\d+))?\s+(?:concise\s+)?sentences?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, kPattern)) {
    return std::nullopt;
  }
  SentenceBudget budget;
  budget.min = std::stoi(m[1].str());
  budget.max = m[2].matched ? std::stoi(m[2].str()) : budget.min;
  return budget;
}

std::string PromptTemplate::RenderSystem() const {
  std::string out = system_preamble;
  if (!focus_lines.empty()) out += "\n";
  for (const std::string& line : focus_lines) {
    out += "\n- ";
    out += line;
  }
  return out;
}

PromptLibrary PromptLibrary::Defaults() {
  PromptLibrary lib;
  lib.preamble_ = std::string(kDefaultPreamble);
  lib.focus_lines_ = DefaultFocusLines();
  lib.system_prompt_ = std::string(kDefaultSystemPrompt);
  lib.inference_reason_ = std::string(kDefaultInferenceReason);
  lib.inference_simple_ = std::string(kDefaultInferenceSimple);
  lib.judge_system_ = std::string(kDefaultJudgeSystem);
  lib.judge_user_ = std::string(kDefaultJudgeUser);
  lib.Rebuild();
  return lib;
}

PromptLibrary PromptLibrary::FromDirectory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIoError,
                "template directory not found: " + dir.string());
  }
  PromptLibrary lib = Defaults();
  if (auto s = ReadFile(dir / "preamble.txt")) lib.preamble_ = TrimmedOwned(*s);
  for (TaskCategory c : kAllCategories) {
    if (auto s = ReadFile(dir / (std::string(ToString(c)) + ".txt"))) {
      lib.focus_lines_[Index(c)] = ParseFocusLines(*s);
    }
  }
  if (auto s = ReadFile(dir / "system.txt")) lib.system_prompt_ = TrimmedOwned(*s);
  if (auto s = ReadFile(dir / "inference_reason.txt")) {
    lib.inference_reason_ = TrimmedOwned(*s);
  }
  if (auto s = ReadFile(dir / "inference_simple.txt")) {
    lib.inference_simple_ = TrimmedOwned(*s);
  }
  if (auto s = ReadFile(dir / "judge_system.txt")) lib.judge_system_ = TrimmedOwned(*s);
  if (auto s = ReadFile(dir / "judge_user.txt")) lib.judge_user_ = TrimmedOwned(*s);
  lib.Rebuild();
  return lib;
}

void PromptLibrary::Rebuild() {
  for (TaskCategory c : kAllCategories) {
    PromptTemplate& t = templates_[Index(c)];
    t.category = c;
    t.focus_lines = focus_lines_[Index(c)];
    t.system_preamble =
        ReplaceAll(preamble_, "{category}", ToString(c));
    // The budget follows whatever the rendered instructions say, so an
    // overridden template cannot disagree with the checks applied later.
    t.sentence_budget = kDefaultBudgets[Index(c)];
    for (const std::string& line : t.focus_lines) {
      if (auto b = ParseSentenceBudget(line)) {
        t.sentence_budget = *b;
        break;
      }
    }
  }
}

const PromptTemplate& PromptLibrary::reasoning_template(TaskCategory c) const {
  return templates_[Index(c)];
}

namespace {

std::vector<fs::path> FrameImages(const Frame& frame, const fs::path& root) {
  std::vector<fs::path> images;
  for (const std::string& p : frame.image_paths()) images.push_back(root / p);
  return images;
}

}  // namespace

std::vector<ChatMessage> PromptLibrary::build_reasoning_prompt(
    const QaRecord& record, const Frame& frame, const fs::path& image_root) const {
  const PromptTemplate& t = reasoning_template(record.category());
  std::vector<ChatMessage> messages;
  messages.push_back({"system", t.RenderSystem(), {}});
  messages.push_back({"user",
                      "Question: " + record.question() +
                          "\nAnswer: " + record.gt_answer(),
                      FrameImages(frame, image_root)});
  return messages;
}

std::vector<ChatMessage> PromptLibrary::build_inference_prompt(
    const QaRecord& record, const Frame& frame, const fs::path& image_root,
    Variant variant) const {
  const std::string& instruction =
      variant == Variant::kReason ? inference_reason_ : inference_simple_;
  std::vector<ChatMessage> messages;
  messages.push_back({"system", system_prompt_, {}});
  messages.push_back({"user", record.question() + "\n\n" + instruction,
                      FrameImages(frame, image_root)});
  return messages;
}

std::vector<ChatMessage> PromptLibrary::build_judge_prompt(
    std::string_view question, std::string_view reference,
    std::string_view candidate) const {
  // Single pass so that placeholders inside the substituted texts survive.
  std::string body;
  std::string_view tmpl = judge_user_;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      body.append(tmpl.substr(pos));
      break;
    }
    body.append(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open);
    const std::string_view name =
        close == std::string_view::npos ? std::string_view{}
                                        : tmpl.substr(open + 1, close - open - 1);
    if (name == "question") {
      body.append(question);
    } else if (name == "reference") {
      body.append(reference);
    } else if (name == "candidate") {
      body.append(candidate);
    } else {
      body.push_back('{');
      pos = open + 1;
      continue;
    }
    pos = close + 1;
  }
  return {{"system", judge_system_, {}}, {"user", body, {}}};
}

}  // namespace reasondrive
