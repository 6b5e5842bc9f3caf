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

// Chat-completion client: content-addressed disk cache, retries with
// exponential backoff, a sliding-window rate limiter, a token spend cap and
// bounded-concurrency batches. The wire itself is behind Transport.

#ifndef REASONDRIVE_GATEWAY_HPP_
#define REASONDRIVE_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasondrive/chat_message.hpp"
#include "reasondrive/core.hpp"

namespace reasondrive {

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

nlohmann::json ToJson(const Usage& usage);
Usage UsageFromJson(const nlohmann::json& j);

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 512;

  // SHA-256 over (model, messages, temperature). Images contribute their
  // content digest, never their path; unreadable images contribute a
  // "missing:" marker with the path.
  std::string request_key() const;
};

struct CompletionResult {
  std::string text;
  Usage usage;
  bool from_cache = false;
  int attempts = 1;       // transport attempts that produced this text
  int network_calls = 0;  // calls made by this invocation; 0 when cached
  std::string request_key;
};

// What a transport hands back for one attempt. Status 0 means the request
// never produced an HTTP response (connection failure and the like).
struct TransportReply {
  int status = 200;
  std::string text;
  Usage usage;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply Send(const CompletionRequest& request,
                              const std::string& request_key) = 0;
};

class Clock {
 public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() const = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() const override;
  void sleep_for(duration d) override;
};

// Time only moves when someone sleeps.
class FakeClock final : public Clock {
 public:
  time_point now() const override { return time_point(duration(ns_.load())); }
  void sleep_for(duration d) override { ns_ += d.count(); }
  void advance(duration d) { ns_ += d.count(); }

 private:
  std::atomic<std::int64_t> ns_{0};
};

// At most `per_second` dispatches in any half-open one-second window.
class RateLimiter {
 public:
  RateLimiter(int per_second, std::shared_ptr<Clock> clock);
  void Acquire();

 private:
  int per_second_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> recent_;
};

struct GatewayOptions {
  std::filesystem::path cache_dir;  // empty disables caching
  int max_retries = 4;              // additional attempts after the first
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  int rate_limit_per_second = 0;    // 0 = unlimited
  std::optional<std::int64_t> max_total_tokens;
};

struct CallOptions {
  // Skip the cache lookup (the fresh answer still overwrites the entry).
  // Used for regeneration after an unusable response.
  bool refresh = false;
};

struct BatchItem {
  std::optional<CompletionResult> result;
  std::optional<Error> error;

  bool ok() const { return result.has_value(); }
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Transport> transport, GatewayOptions options,
          std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());

  // Throws kAuthFailed, kBudgetExceeded, kExhaustedRetries, kTransportError.
  CompletionResult complete(const CompletionRequest& request,
                            CallOptions options = {});

  // Results align with `requests`; failures are reported per element.
  // Throws kPreconditionViolated when max_in_flight < 1.
  std::vector<BatchItem> complete_batch(
      const std::vector<CompletionRequest>& requests, int max_in_flight,
      CallOptions options = {});

  Usage total_usage() const;
  std::int64_t network_calls() const { return network_calls_.load(); }
  std::int64_t cache_hits() const { return cache_hits_.load(); }

 private:
  CompletionResult CallWithRetries(const CompletionRequest& request,
                                   const std::string& key);
  std::optional<CompletionResult> LoadCached(const std::string& key) const;
  void StoreCached(const std::string& key, const CompletionRequest& request,
                   const CompletionResult& result) const;
  std::filesystem::path CachePath(const std::string& key) const;

  std::shared_ptr<Transport> transport_;
  GatewayOptions options_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<RateLimiter> limiter_;

  mutable std::mutex mu_;
  Usage usage_;
  std::map<std::string, std::shared_future<CompletionResult>> in_flight_;
  std::atomic<std::int64_t> network_calls_{0};
  std::atomic<std::int64_t> cache_hits_{0};
};

}  // namespace reasondrive

#endif  // REASONDRIVE_GATEWAY_HPP_
