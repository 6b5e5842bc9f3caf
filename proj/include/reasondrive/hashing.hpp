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

#ifndef REASONDRIVE_HASHING_HPP_
#define REASONDRIVE_HASHING_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace reasondrive {

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view data);

// Digest of the file contents; nullopt when the file cannot be read.
// Results are memoized per (path, size, mtime).
std::optional<std::string> Sha256FileHex(const std::filesystem::path& path);

std::string Base64Encode(std::string_view data);

// Whole file as bytes; throws Error(kIoError) when unreadable.
std::string ReadFileBytes(const std::filesystem::path& path);

// Writes via a temporary sibling and rename so readers never observe a
// partial file. Throws Error(kIoError).
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

}  // namespace reasondrive

#endif  // REASONDRIVE_HASHING_HPP_
