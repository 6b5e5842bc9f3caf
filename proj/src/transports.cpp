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

#include "reasondrive/transports.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <thread>

#include "reasondrive/hashing.hpp"
#include "reasondrive/prompt_forge.hpp"

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string MimeType(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

json BuildWireBody(const CompletionRequest& request) {
  json messages = json::array();
  for (const ChatMessage& m : request.messages) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    for (const fs::path& image : m.images) {
      const std::string url =
          "data:" + MimeType(image) + ";base64," + Base64Encode(ReadFileBytes(image));
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    messages.push_back({{"role", m.role}, {"content", content}});
  }
  return json{{"model", request.model},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

TransportReply ParseWireResponse(int status, const std::string& body) {
  TransportReply reply;
  reply.status = status;
  if (status < 200 || status >= 300) {
    reply.error = body.substr(0, 512);
    return reply;
  }
  try {
    const json j = json::parse(body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) {
      reply.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const json& part : content) {
        if (part.value("type", "") == "text") reply.text += part.value("text", "");
      }
    }
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      reply.usage = UsageFromJson(*usage);
    }
  } catch (const json::exception& e) {
    // A 2xx we cannot read is treated like a server fault and retried.
    reply.status = 502;
    reply.error = std::string("unreadable completion body: ") + e.what();
  }
  return reply;
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(EndpointConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, kUrl)) {
    throw Error(ErrorCode::kInvalidConfig, "bad endpoint url " + config_.url);
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

TransportReply HttpTransport::Send(const CompletionRequest& request,
                                   const std::string& /*request_key*/) {
  std::string body;
  try {
    body = BuildWireBody(request).dump();
  } catch (const Error& e) {
    // Unreadable images will not get better on retry.
    return TransportReply{400, "", {}, e.what()};
  }
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    return TransportReply{0, "", {}, httplib::to_string(res.error())};
  }
  return ParseWireResponse(res->status, res->body);
}

// ---------------------------------------------------------------------------

MockTransport::MockTransport(Responder responder)
    : responder_(std::move(responder)) {}

std::shared_ptr<MockTransport> MockTransport::Canned(std::string text) {
  return std::make_shared<MockTransport>(
      [text = std::move(text)](const CompletionRequest&) {
        return TransportReply{200, text, {10, 5}, ""};
      });
}

std::shared_ptr<MockTransport> MockTransport::Scripted(
    std::vector<TransportReply> script) {
  if (script.empty()) {
    throw Error(ErrorCode::kPreconditionViolated, "empty mock script");
  }
  auto state = std::make_shared<std::pair<std::mutex, std::size_t>>();
  return std::make_shared<MockTransport>(
      [script = std::move(script), state](const CompletionRequest&) {
        std::lock_guard<std::mutex> lock(state->first);
        const std::size_t i = std::min(state->second, script.size() - 1);
        ++state->second;
        return script[i];
      });
}

std::shared_ptr<MockTransport> MockTransport::Offline() {
  return std::make_shared<MockTransport>([](const CompletionRequest& request) {
    std::string all_text;
    for (const ChatMessage& m : request.messages) all_text += m.text + "\n";
    TransportReply reply{200, "", {static_cast<std::int64_t>(all_text.size() / 4), 16}, ""};
    if (all_text.find("reasoning system") != std::string::npos) {
      const int sentences = ParseSentenceBudget(all_text).value_or(SentenceBudget{}).min;
      std::string think;
      for (int i = 1; i <= sentences; ++i) {
        if (i > 1) think += " ";
        think += "Step " + std::to_string(i) +
                 " relates the camera views to the provided answer.";
      }
      reply.text = "<think>" + think + "</think>";
    } else if (all_text.find("Rate the model answer") != std::string::npos) {
      reply.text = "50";
    } else {
      reply.text = "<think>Offline mock reasoning.</think>\n"
                   "<answer>Offline mock answer.</answer>";
    }
    return reply;
  });
}

TransportReply MockTransport::Send(const CompletionRequest& request,
                                   const std::string& /*request_key*/) {
  ++calls_;
  const int now_in_flight = ++in_flight_;
  int peak = peak_.load();
  while (now_in_flight > peak && !peak_.compare_exchange_weak(peak, now_in_flight)) {
  }
  if (clock_) {
    std::lock_guard<std::mutex> lock(mu_);
    dispatches_.push_back(clock_->now());
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  TransportReply reply;
  try {
    reply = responder_(request);
  } catch (...) {
    --in_flight_;
    throw;
  }
  --in_flight_;
  return reply;
}

std::vector<Clock::time_point> MockTransport::dispatch_times() const {
  std::lock_guard<std::mutex> lock(mu_);
  return dispatches_;
}

// ---------------------------------------------------------------------------

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner,
                                       fs::path fixture_dir)
    : inner_(std::move(inner)), dir_(std::move(fixture_dir)) {}

TransportReply RecordingTransport::Send(const CompletionRequest& request,
                                        const std::string& request_key) {
  TransportReply reply = inner_->Send(request, request_key);
  if (reply.status >= 200 && reply.status < 300) {
    const json fixture{{"request_key", request_key},
                       {"model", request.model},
                       {"status", reply.status},
                       {"text", reply.text},
                       {"usage", ToJson(reply.usage)}};
    WriteFileAtomic(dir_ / (request_key + ".json"), fixture.dump(2));
  }
  return reply;
}

ReplayTransport::ReplayTransport(fs::path fixture_dir) : dir_(std::move(fixture_dir)) {}

TransportReply ReplayTransport::Send(const CompletionRequest& /*request*/,
                                     const std::string& request_key) {
  const fs::path path = dir_ / (request_key + ".json");
  std::ifstream in(path);
  if (!in) {
    return TransportReply{404, "", {}, "no replay fixture " + path.string()};
  }
  try {
    const json fixture = json::parse(in);
    return TransportReply{fixture.value("status", 200),
                          fixture.at("text").get<std::string>(),
                          UsageFromJson(fixture.value("usage", json::object())),
                          ""};
  } catch (const json::exception& e) {
    return TransportReply{404, "", {}, "corrupt fixture " + path.string()};
  }
}

}  // namespace reasondrive
