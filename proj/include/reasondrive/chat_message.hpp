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

#ifndef REASONDRIVE_CHAT_MESSAGE_HPP_
#define REASONDRIVE_CHAT_MESSAGE_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace reasondrive {

// One chat-completion message. Images are attached by path and only read
// when the request is hashed or sent.
struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string text;
  std::vector<std::filesystem::path> images;

  bool operator==(const ChatMessage&) const = default;
};

}  // namespace reasondrive

#endif  // REASONDRIVE_CHAT_MESSAGE_HPP_
