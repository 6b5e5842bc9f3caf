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

#include "reasondrive/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;

ToolkitConfig ConfigFromJson(const json& j) {
  ToolkitConfig c;
  try {
    const json endpoint = j.value("endpoint", json::object());
    c.endpoint.url = endpoint.value("url", c.endpoint.url);
    c.endpoint.api_key = endpoint.value("api_key", c.endpoint.api_key);
    c.endpoint.timeout_seconds =
        endpoint.value("timeout_seconds", c.endpoint.timeout_seconds);
    c.transport = endpoint.value("transport", c.transport);
    c.fixtures_dir = endpoint.value("fixtures_dir", c.fixtures_dir.string());
    c.gateway.cache_dir = endpoint.value("cache_dir", c.gateway.cache_dir.string());
    c.gateway.max_retries = endpoint.value("max_retries", c.gateway.max_retries);
    c.gateway.base_backoff = std::chrono::milliseconds(
        endpoint.value("base_backoff_ms", c.gateway.base_backoff.count()));
    c.gateway.max_backoff = std::chrono::milliseconds(
        endpoint.value("max_backoff_ms", c.gateway.max_backoff.count()));
    c.gateway.rate_limit_per_second =
        endpoint.value("rate_limit_per_second", c.gateway.rate_limit_per_second);
    if (endpoint.contains("max_total_tokens") &&
        !endpoint.at("max_total_tokens").is_null()) {
      c.gateway.max_total_tokens = endpoint.at("max_total_tokens").get<std::int64_t>();
    }
    c.max_in_flight = endpoint.value("max_in_flight", c.max_in_flight);

    const json gen = j.value("generation", json::object());
    c.generation.model = gen.value("model", c.generation.model);
    c.generation.temperature = gen.value("temperature", c.generation.temperature);
    c.generation.max_tokens = gen.value("max_tokens", c.generation.max_tokens);
    c.generation.max_regenerations =
        gen.value("max_regenerations", c.generation.max_regenerations);
    c.generation.max_in_flight = c.max_in_flight;
    c.template_dir = gen.value("template_dir", std::string());
    if (gen.contains("system_prompt")) {
      c.system_prompt = gen.at("system_prompt").get<std::string>();
    }

    const json judge = j.value("judge", json::object());
    c.judge.model = judge.value("model", c.judge.model);
    c.judge.temperature = judge.value("temperature", c.judge.temperature);
    c.judge.max_tokens = judge.value("max_tokens", c.judge.max_tokens);
    c.judge.max_reparses = judge.value("max_reparses", c.judge.max_reparses);
    c.judge.max_in_flight = c.max_in_flight;

    c.metrics = MetricConfigFromJson(j.value("metrics", json::object()));
    if (j.contains("weights")) {
      c.metrics.final_weights = FinalWeightsFromJson(j.at("weights"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }

  if (const char* key = std::getenv(kApiKeyEnv); key && *key) {
    c.endpoint.api_key = key;
  }
  if (c.transport != "http" && c.transport != "mock" && c.transport != "record" &&
      c.transport != "replay") {
    throw Error(ErrorCode::kInvalidConfig, "unknown transport " + c.transport);
  }
  if (c.max_in_flight < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_in_flight must be >= 1");
  }
  c.metrics.Validate();
  return c;
}

ToolkitConfig LoadConfig(const fs::path& path) {
  if (path.empty()) return ConfigFromJson(json::object());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return ConfigFromJson(j);
}

json ToJson(const ToolkitConfig& c) {
  json metrics = ToJson(c.metrics);
  metrics.erase("final_weights");
  return json{
      {"endpoint",
       {{"url", c.endpoint.url},
        {"transport", c.transport},
        {"max_retries", c.gateway.max_retries},
        {"rate_limit_per_second", c.gateway.rate_limit_per_second},
        {"max_in_flight", c.max_in_flight}}},
      {"generation",
       {{"model", c.generation.model},
        {"temperature", c.generation.temperature},
        {"max_tokens", c.generation.max_tokens},
        {"max_regenerations", c.generation.max_regenerations}}},
      {"judge",
       {{"model", c.judge.model},
        {"temperature", c.judge.temperature},
        {"max_tokens", c.judge.max_tokens},
        {"max_reparses", c.judge.max_reparses}}},
      {"metrics", metrics},
      {"weights", ToJson(c.metrics.final_weights)}};
}

std::shared_ptr<Transport> MakeTransport(const ToolkitConfig& c) {
  if (c.transport == "mock") return MockTransport::Offline();
  if (c.transport == "replay") return std::make_shared<ReplayTransport>(c.fixtures_dir);
  auto http = std::make_shared<HttpTransport>(c.endpoint);
  if (c.transport == "record") {
    return std::make_shared<RecordingTransport>(http, c.fixtures_dir);
  }
  return http;
}

PromptLibrary MakePromptLibrary(const ToolkitConfig& c) {
  PromptLibrary lib = c.template_dir.empty() ? PromptLibrary::Defaults()
                                             : PromptLibrary::FromDirectory(c.template_dir);
  if (c.system_prompt) lib.set_system_prompt(*c.system_prompt);
  return lib;
}

FinalWeights ParseWeights(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const std::string trimmed(Trim(item));
      parts.push_back(std::stod(trimmed, &used));
      if (used != trimmed.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kWeightsInvalid, "not a number: '" + item + "'");
    }
  }
  if (parts.size() != 4) {
    throw Error(ErrorCode::kWeightsInvalid,
                "expected judge,language,match,accuracy weights");
  }
  FinalWeights w{parts[0], parts[1], parts[2], parts[3]};
  ValidateWeights(w);
  return w;
}

}  // namespace reasondrive
