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

// The structured output protocol: <think>/<answer> segments and <cN...>
// object tags.
//
// Wire format produced by emit_structured (bit-exact):
//   "<think>{think}</think>\n<answer>{answer}</answer>"   with reasoning
//   "<answer>{answer}</answer>"                           without
//
// parse_structured accepts imperfect model output and records how the
// segments were recovered:
//   STRICT                <think>..</think> then <answer>..</answer>
//   FALLBACK_AFTER_THINK  think block closed; the answer is the text after
//                         </think> (or an answer block that came first)
//   FALLBACK_WHOLE        no closed think block; the answer is the first
//                         complete answer block, else the whole text
// Marker names are case-sensitive.

#ifndef REASONDRIVE_TAG_CODEC_HPP_
#define REASONDRIVE_TAG_CODEC_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasondrive/core.hpp"

namespace reasondrive {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

enum class ParseMode { kStrict, kFallbackWhole, kFallbackAfterThink };

std::string_view ToString(ParseMode mode);
std::optional<ParseMode> ParseParseMode(std::string_view name);

struct ParsedOutput {
  std::optional<std::string> think;
  std::string answer;
  std::vector<ObjectTag> tags_in_answer;
  ParseMode parse_mode = ParseMode::kFallbackWhole;
  std::vector<Finding> warnings;
};

// Throws kEmptyInput on an empty string; total on everything else.
ParsedOutput parse_structured(std::string_view raw);

// Tags in first-occurrence order, de-duplicated by id (first wins).
std::vector<ObjectTag> extract_tags(std::string_view text);

// Parses a single tag token such as "<c3>" or "<c3,CAM_FRONT,510.3,402.1>".
// Returns nullopt when the token is not a well-formed tag.
std::optional<ObjectTag> parse_tag(std::string_view token);

// Length of the tag starting at text[0], or 0 when none starts there.
std::size_t match_tag_at(std::string_view text);

// Throws kEmptyInput for an empty answer and kNestedMarkers when either
// segment already contains a marker string.
std::string emit_structured(const std::optional<std::string>& think,
                            std::string_view answer);

bool contains_marker(std::string_view text);

}  // namespace reasondrive

#endif  // REASONDRIVE_TAG_CODEC_HPP_
