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

// Transport implementations: HTTP chat-completions, a scriptable mock, and
// record/replay over fixture files.

#ifndef REASONDRIVE_TRANSPORTS_HPP_
#define REASONDRIVE_TRANSPORTS_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasondrive/gateway.hpp"

namespace reasondrive {

struct EndpointConfig {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string api_key;
  int timeout_seconds = 120;
};

// {model, messages:[{role, content:[{type:"text",text} |
//  {type:"image_url", image_url:{url:"data:<mime>;base64,..."}}]}],
//  temperature, max_tokens}
// Throws kIoError when an attached image cannot be read.
nlohmann::json BuildWireBody(const CompletionRequest& request);

// Extracts choices[0].message.content and usage from a 2xx body; anything
// else keeps the status and carries the body as the error text.
TransportReply ParseWireResponse(int status, const std::string& body);

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(EndpointConfig config);
  TransportReply Send(const CompletionRequest& request,
                      const std::string& request_key) override;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

// Scriptable in-process transport. Tracks call counts, the peak number of
// concurrent Send calls, and dispatch times on an optional clock.
class MockTransport final : public Transport {
 public:
  using Responder = std::function<TransportReply(const CompletionRequest&)>;

  explicit MockTransport(Responder responder);

  // Always answers `text` with status 200.
  static std::shared_ptr<MockTransport> Canned(std::string text);
  // Replies in order; the last reply repeats once the script runs out.
  static std::shared_ptr<MockTransport> Scripted(std::vector<TransportReply> script);
  // Deterministic stand-in for offline pipeline runs: reasoning requests get
  // a chain sized to the budget named in the prompt, judge requests get 50,
  // everything else a tagged answer.
  static std::shared_ptr<MockTransport> Offline();

  TransportReply Send(const CompletionRequest& request,
                      const std::string& request_key) override;

  // Real-time delay inside Send, so concurrent callers overlap.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }
  void set_clock(std::shared_ptr<Clock> clock) { clock_ = std::move(clock); }

  int calls() const { return calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  std::vector<Clock::time_point> dispatch_times() const;

 private:
  Responder responder_;
  std::chrono::milliseconds latency_{0};
  std::shared_ptr<Clock> clock_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex mu_;
  std::vector<Clock::time_point> dispatches_;
};

// Passes requests to `inner` and writes every 2xx reply to
// <fixture_dir>/<request_key>.json.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner,
                     std::filesystem::path fixture_dir);
  TransportReply Send(const CompletionRequest& request,
                      const std::string& request_key) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path dir_;
};

// Serves recorded fixtures; a missing fixture is a non-retryable 404.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(std::filesystem::path fixture_dir);
  TransportReply Send(const CompletionRequest& request,
                      const std::string& request_key) override;

 private:
  std::filesystem::path dir_;
};

}  // namespace reasondrive

#endif  // REASONDRIVE_TRANSPORTS_HPP_
