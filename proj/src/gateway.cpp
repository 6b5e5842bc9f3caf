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

#include "reasondrive/gateway.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "reasondrive/hashing.hpp"

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;

json ToJson(const Usage& usage) {
  return json{{"prompt_tokens", usage.prompt_tokens},
              {"completion_tokens", usage.completion_tokens}};
}

Usage UsageFromJson(const json& j) {
  Usage u;
  u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  return u;
}

std::string CompletionRequest::request_key() const {
  json messages_json = json::array();
  for (const ChatMessage& m : messages) {
    json images = json::array();
    for (const fs::path& image : m.images) {
      auto digest = Sha256FileHex(image);
      images.push_back(digest ? *digest : "missing:" + image.string());
    }
    messages_json.push_back(
        json{{"role", m.role}, {"text", m.text}, {"images", images}});
  }
  const json canonical{{"model", model},
                       {"temperature", temperature},
                       {"messages", messages_json}};
  return Sha256Hex(canonical.dump());
}

// ---------------------------------------------------------------------------

Clock::time_point SystemClock::now() const {
  return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
}

void SystemClock::sleep_for(duration d) { std::this_thread::sleep_for(d); }

RateLimiter::RateLimiter(int per_second, std::shared_ptr<Clock> clock)
    : per_second_(per_second), clock_(std::move(clock)) {}

void RateLimiter::Acquire() {
  if (per_second_ <= 0) return;
  constexpr auto kWindow = std::chrono::seconds(1);
  std::lock_guard<std::mutex> lock(mu_);
  auto now = clock_->now();
  while (!recent_.empty() && recent_.front() + kWindow <= now) {
    recent_.pop_front();
  }
  if (static_cast<int>(recent_.size()) >= per_second_) {
    clock_->sleep_for(recent_.front() + kWindow - now);
    now = clock_->now();
    while (!recent_.empty() && recent_.front() + kWindow <= now) {
      recent_.pop_front();
    }
  }
  recent_.push_back(now);
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Transport> transport, GatewayOptions options,
                 std::shared_ptr<Clock> clock)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      clock_(std::move(clock)),
      limiter_(std::make_unique<RateLimiter>(options_.rate_limit_per_second,
                                             clock_)) {
  if (!transport_) {
    throw Error(ErrorCode::kInvalidConfig, "gateway needs a transport");
  }
  if (options_.max_retries < 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_retries must be >= 0");
  }
}

Usage Gateway::total_usage() const {
  std::lock_guard<std::mutex> lock(mu_);
  return usage_;
}

fs::path Gateway::CachePath(const std::string& key) const {
  return options_.cache_dir / key.substr(0, 2) / (key + ".json");
}

std::optional<CompletionResult> Gateway::LoadCached(const std::string& key) const {
  if (options_.cache_dir.empty()) return std::nullopt;
  const fs::path path = CachePath(key);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json entry = json::parse(in);
    if (entry.at("request_key").get<std::string>() != key) return std::nullopt;
    CompletionResult r;
    r.text = entry.at("text").get<std::string>();
    r.usage = UsageFromJson(entry.value("usage", json::object()));
    r.attempts = entry.value("attempts", 1);
    r.from_cache = true;
    r.network_calls = 0;
    r.request_key = key;
    return r;
  } catch (const json::exception& e) {
    spdlog::warn("ignoring corrupt cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void Gateway::StoreCached(const std::string& key, const CompletionRequest& request,
                          const CompletionResult& result) const {
  if (options_.cache_dir.empty()) return;
  const json entry{
      {"request_key", key},
      {"request", {{"model", request.model},
                   {"temperature", request.temperature},
                   {"max_tokens", request.max_tokens},
                   {"messages", request.messages.size()}}},
      {"text", result.text},
      {"usage", ToJson(result.usage)},
      {"attempts", result.attempts},
      {"stored_at", static_cast<std::int64_t>(std::time(nullptr))}};
  WriteFileAtomic(CachePath(key), entry.dump(2));
}

CompletionResult Gateway::CallWithRetries(const CompletionRequest& request,
                                          const std::string& key) {
  TransportReply last;
  const int max_attempts = options_.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (options_.max_total_tokens) {
      std::lock_guard<std::mutex> lock(mu_);
      if (usage_.total() >= *options_.max_total_tokens) {
        throw Error(ErrorCode::kBudgetExceeded,
                    "spent " + std::to_string(usage_.total()) + " of " +
                        std::to_string(*options_.max_total_tokens) + " tokens");
      }
    }
    limiter_->Acquire();
    last = transport_->Send(request, key);
    ++network_calls_;

    if (last.status >= 200 && last.status < 300) {
      CompletionResult r;
      r.text = std::move(last.text);
      r.usage = last.usage;
      r.attempts = attempt;
      r.network_calls = attempt;
      r.request_key = key;
      {
        std::lock_guard<std::mutex> lock(mu_);
        usage_ += r.usage;
      }
      StoreCached(key, request, r);
      return r;
    }
    if (last.status == 401 || last.status == 403) {
      throw Error(ErrorCode::kAuthFailed,
                  "status " + std::to_string(last.status) + " " + last.error);
    }
    const bool retryable =
        last.status == 0 || last.status == 429 || last.status >= 500;
    if (!retryable) {
      throw Error(ErrorCode::kTransportError,
                  "status " + std::to_string(last.status) + " " + last.error);
    }
    if (attempt == max_attempts) break;
    auto delay = options_.base_backoff * (1LL << std::min(attempt - 1, 20));
    delay = std::min<std::chrono::milliseconds>(delay, options_.max_backoff);
    spdlog::debug("status {} on attempt {}; retrying in {} ms", last.status,
                  attempt, delay.count());
    clock_->sleep_for(delay);
  }
  if (last.status == 0) {
    throw Error(ErrorCode::kTransportError,
                "no response after " + std::to_string(max_attempts) +
                    " attempts: " + last.error);
  }
  throw Error(ErrorCode::kExhaustedRetries,
              "last status " + std::to_string(last.status) + " after " +
                  std::to_string(max_attempts) + " attempts");
}

CompletionResult Gateway::complete(const CompletionRequest& request,
                                   CallOptions call) {
  const std::string key = request.request_key();
  if (call.refresh) return CallWithRetries(request, key);

  if (auto cached = LoadCached(key)) {
    ++cache_hits_;
    return *cached;
  }

  std::promise<CompletionResult> promise;
  {
    std::unique_lock<std::mutex> lock(mu_);
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      auto future = it->second;
      lock.unlock();
      CompletionResult r = future.get();
      r.from_cache = true;
      r.network_calls = 0;
      ++cache_hits_;
      return r;
    }
    // Another caller may have finished between the lookup and the lock.
    if (auto cached = LoadCached(key)) {
      ++cache_hits_;
      return *cached;
    }
    in_flight_.emplace(key, promise.get_future().share());
  }

  auto release = [&] {
    std::lock_guard<std::mutex> lock(mu_);
    in_flight_.erase(key);
  };
  try {
    CompletionResult r = CallWithRetries(request, key);
    promise.set_value(r);
    release();
    return r;
  } catch (...) {
    promise.set_exception(std::current_exception());
    release();
    throw;
  }
}

std::vector<BatchItem> Gateway::complete_batch(
    const std::vector<CompletionRequest>& requests, int max_in_flight,
    CallOptions call) {
  if (max_in_flight < 1) {
    throw Error(ErrorCode::kPreconditionViolated, "max_in_flight must be >= 1");
  }
  std::vector<BatchItem> items(requests.size());
  if (requests.empty()) return items;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        items[i].result = complete(requests[i], call);
      } catch (const Error& e) {
        items[i].error = e;
      } catch (const std::exception& e) {
        items[i].error = Error(ErrorCode::kTransportError, e.what());
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return items;
}

}  // namespace reasondrive
