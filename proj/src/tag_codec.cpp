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

#include "reasondrive/tag_codec.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <unordered_set>

#include <spdlog/spdlog.h>

namespace reasondrive {

namespace {

constexpr std::array<std::string_view, 4> kMarkers = {
    kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose};

bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Minimal cursor over a tag body; every Consume* returns false on mismatch
// without guaranteeing the position.
struct Cursor {
  std::string_view s;
  std::size_t pos = 0;

  bool AtEnd() const { return pos >= s.size(); }
  char Peek() const { return AtEnd() ? '\0' : s[pos]; }
  bool Consume(char c) {
    if (Peek() != c) return false;
    ++pos;
    return true;
  }
  void SkipSpaces() {
    while (!AtEnd() && s[pos] == ' ') ++pos;
  }
  bool ConsumeDigits() {
    const std::size_t start = pos;
    while (!AtEnd() && IsDigit(s[pos])) ++pos;
    return pos > start;
  }
  // -?\d+(\.\d+)?
  bool ConsumeNumber() {
    Consume('-');
    if (!ConsumeDigits()) return false;
    if (Peek() == '.') {
      ++pos;
      if (!ConsumeDigits()) return false;
    }
    return true;
  }
  bool ConsumeCameraName() {
    const std::size_t start = pos;
    while (!AtEnd() && (std::isupper(static_cast<unsigned char>(s[pos])) ||
                        s[pos] == '_')) {
      ++pos;
    }
    return pos > start;
  }
};

double ToDouble(std::string_view s) {
  // strtod needs a terminated buffer; tags are short.
  return std::strtod(std::string(s).c_str(), nullptr);
}

std::string StripMarkers(std::string text) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view marker : kMarkers) {
      std::size_t at;
      while ((at = text.find(marker)) != std::string::npos) {
        text.erase(at, marker.size());
        changed = true;
      }
    }
  }
  return text;
}

struct Block {
  std::size_t open = std::string_view::npos;   // index of the open marker
  std::size_t close = std::string_view::npos;  // index of the close marker
  std::size_t content_begin = 0;
  bool found() const { return close != std::string_view::npos; }
  std::size_t end() const { return close + kAnswerClose.size(); }
};

// First complete <answer>...</answer> block in text[from, to).
Block FindAnswerBlock(std::string_view text, std::size_t from = 0,
                      std::size_t to = std::string_view::npos) {
  Block block;
  text = text.substr(0, std::min(to, text.size()));
  const std::size_t open = text.find(kAnswerOpen, from);
  if (open == std::string_view::npos) return block;
  const std::size_t begin = open + kAnswerOpen.size();
  const std::size_t close = text.find(kAnswerClose, begin);
  if (close == std::string_view::npos) return block;
  block.open = open;
  block.close = close;
  block.content_begin = begin;
  return block;
}

std::string BlockContent(std::string_view text, const Block& block) {
  return std::string(
      Trim(text.substr(block.content_begin, block.close - block.content_begin)));
}

void WarnIfRepeated(std::string_view text, const Block& first,
                    ParsedOutput& out) {
  if (FindAnswerBlock(text, first.end()).found()) {
    out.warnings.push_back({Severity::kWarning,
                            ErrorCode::kMultipleAnswerBlocks, "answer",
                            "more than one answer block; the first is used"});
  }
}

}  // namespace

std::string_view ToString(ParseMode mode) {
  switch (mode) {
    case ParseMode::kStrict: return "STRICT";
    case ParseMode::kFallbackWhole: return "FALLBACK_WHOLE";
    case ParseMode::kFallbackAfterThink: return "FALLBACK_AFTER_THINK";
  }
  return "FALLBACK_WHOLE";
}

std::optional<ParseMode> ParseParseMode(std::string_view name) {
  for (ParseMode mode : {ParseMode::kStrict, ParseMode::kFallbackWhole,
                         ParseMode::kFallbackAfterThink}) {
    if (ToString(mode) == name) return mode;
  }
  return std::nullopt;
}

std::size_t match_tag_at(std::string_view text) {
  Cursor cur{text};
  if (!cur.Consume('<') || !cur.Consume('c')) return 0;
  if (cur.Peek() == '0' || !cur.ConsumeDigits()) return 0;
  if (cur.Consume('>')) return cur.pos;
  if (!cur.Consume(',')) return 0;
  cur.SkipSpaces();
  if (!cur.ConsumeCameraName()) return 0;
  cur.SkipSpaces();
  if (cur.Consume('>')) return cur.pos;
  if (!cur.Consume(',')) return 0;
  cur.SkipSpaces();
  if (!cur.ConsumeNumber()) return 0;
  cur.SkipSpaces();
  if (!cur.Consume(',')) return 0;
  cur.SkipSpaces();
  if (!cur.ConsumeNumber()) return 0;
  cur.SkipSpaces();
  if (!cur.Consume('>')) return 0;
  return cur.pos;
}

std::optional<ObjectTag> parse_tag(std::string_view token) {
  if (token.empty() || match_tag_at(token) != token.size()) {
    return std::nullopt;
  }
  // Split the body between '<' and '>' on commas.
  std::string_view body = token.substr(1, token.size() - 2);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    fields.push_back(Trim(body.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  ObjectTag tag;
  tag.id = std::string(fields[0]);
  if (fields.size() >= 2) {
    auto camera = ParseCameraView(fields[1]);
    if (!camera) return std::nullopt;
    tag.camera = camera;
  }
  if (fields.size() == 4) {
    tag.coords = PixelCoords{ToDouble(fields[2]), ToDouble(fields[3])};
  }
  return tag;
}

std::vector<ObjectTag> extract_tags(std::string_view text) {
  std::vector<ObjectTag> tags;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    const std::string_view rest = text.substr(i);
    const std::size_t len = match_tag_at(rest);
    if (len == 0) {
      if (rest.size() > 2 && rest[1] == 'c' && IsDigit(rest[2])) {
        spdlog::debug("skipping unparseable tag candidate '{}'",
                      rest.substr(0, std::min<std::size_t>(rest.size(), 32)));
      }
      continue;
    }
    auto tag = parse_tag(rest.substr(0, len));
    if (!tag) {
      spdlog::debug("skipping tag with unknown camera '{}'",
                    rest.substr(0, len));
    } else if (seen.insert(tag->id).second) {
      tags.push_back(std::move(*tag));
    }
    i += len - 1;
  }
  return tags;
}

ParsedOutput parse_structured(std::string_view raw) {
  if (raw.empty()) {
    throw Error(ErrorCode::kEmptyInput, "model output is empty");
  }
  ParsedOutput out;

  const std::size_t think_open = raw.find(kThinkOpen);
  std::size_t think_close = std::string_view::npos;
  if (think_open != std::string_view::npos) {
    think_close = raw.find(kThinkClose, think_open + kThinkOpen.size());
  }

  if (think_close != std::string_view::npos) {
    const std::size_t think_begin = think_open + kThinkOpen.size();
    out.think = std::string(
        Trim(raw.substr(think_begin, think_close - think_begin)));
    const std::size_t after = think_close + kThinkClose.size();

    const Block answer = FindAnswerBlock(raw, after);
    if (answer.found()) {
      out.parse_mode = ParseMode::kStrict;
      out.answer = BlockContent(raw, answer);
      WarnIfRepeated(raw, answer, out);
    } else {
      out.parse_mode = ParseMode::kFallbackAfterThink;
      // An answer block placed before the reasoning still counts as the
      // answer; the order is recorded through the fallback mode.
      const Block early = FindAnswerBlock(raw, 0, think_open);
      if (early.found()) {
        out.answer = BlockContent(raw, early);
        WarnIfRepeated(raw.substr(0, think_open), early, out);
      } else {
        out.answer = std::string(Trim(raw.substr(after)));
      }
    }
  } else {
    out.parse_mode = ParseMode::kFallbackWhole;
    const Block answer = FindAnswerBlock(raw);
    if (answer.found()) {
      out.answer = BlockContent(raw, answer);
      WarnIfRepeated(raw, answer, out);
    } else {
      out.answer = std::string(raw);
    }
  }

  out.answer = std::string(Trim(StripMarkers(std::move(out.answer))));
  out.tags_in_answer = extract_tags(out.answer);
  return out;
}

bool contains_marker(std::string_view text) {
  for (std::string_view marker : kMarkers) {
    if (text.find(marker) != std::string_view::npos) return true;
  }
  return false;
}

std::string emit_structured(const std::optional<std::string>& think,
                            std::string_view answer) {
  if (answer.empty()) {
    throw Error(ErrorCode::kEmptyInput, "answer must not be empty");
  }
  if (contains_marker(answer) || (think && contains_marker(*think))) {
    throw Error(ErrorCode::kNestedMarkers,
                "segment already contains a protocol marker");
  }
  std::string out;
  out.reserve(answer.size() + (think ? think->size() : 0) + 40);
  if (think) {
    out.append(kThinkOpen).append(*think).append(kThinkClose).append("\n");
  }
  out.append(kAnswerOpen).append(answer).append(kAnswerClose);
  return out;
}

}  // namespace reasondrive
