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

// Toolkit configuration file (JSON). Every section and key is optional:
//
//   {
//     "endpoint":   {"url", "api_key", "timeout_seconds", "transport":
//                    "http"|"mock"|"record"|"replay", "fixtures_dir",
//                    "cache_dir", "max_retries", "base_backoff_ms",
//                    "max_backoff_ms", "rate_limit_per_second",
//                    "max_total_tokens", "max_in_flight"},
//     "generation": {"model", "temperature", "max_tokens",
//                    "max_regenerations", "template_dir", "system_prompt"},
//     "judge":      {"model", "temperature", "max_tokens", "max_reparses"},
//     "metrics":    {"bleu_max_order", "bleu_smoothing_epsilon",
//                    "rouge_beta", "cider_max_order", "cider_sigma",
//                    "cider_scale"},
//     "weights":    {"judge", "language", "match", "accuracy"}
//   }
//
// REASONDRIVE_API_KEY in the environment takes precedence over
// endpoint.api_key.

#ifndef REASONDRIVE_CONFIG_HPP_
#define REASONDRIVE_CONFIG_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "reasondrive/chain_assembler.hpp"
#include "reasondrive/core.hpp"
#include "reasondrive/gateway.hpp"
#include "reasondrive/prompt_forge.hpp"
#include "reasondrive/transports.hpp"

namespace reasondrive {

inline constexpr const char* kApiKeyEnv = "REASONDRIVE_API_KEY";

struct JudgeOptions {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 32;
  int max_reparses = 2;  // extra requests when no score can be parsed
  int max_in_flight = 4;
};

inline GatewayOptions DefaultGatewayOptions() {
  GatewayOptions options;
  options.cache_dir = ".reasondrive-cache";
  return options;
}

struct ToolkitConfig {
  EndpointConfig endpoint;
  std::string transport = "http";
  std::filesystem::path fixtures_dir = "fixtures";
  GatewayOptions gateway = DefaultGatewayOptions();
  int max_in_flight = 4;
  GenerationOptions generation;
  std::filesystem::path template_dir;  // empty: embedded templates
  std::optional<std::string> system_prompt;
  JudgeOptions judge;
  MetricConfig metrics;
};

// Defaults when path is empty. Throws kInvalidConfig for unreadable files
// or invalid values.
ToolkitConfig LoadConfig(const std::filesystem::path& path);
ToolkitConfig ConfigFromJson(const nlohmann::json& j);

// Echo for reports; never contains the API key.
nlohmann::json ToJson(const ToolkitConfig& config);

std::shared_ptr<Transport> MakeTransport(const ToolkitConfig& config);
PromptLibrary MakePromptLibrary(const ToolkitConfig& config);

// "0.4,0.2,0.2,0.2" in judge, language, match, accuracy order.
FinalWeights ParseWeights(const std::string& text);

}  // namespace reasondrive

#endif  // REASONDRIVE_CONFIG_HPP_
