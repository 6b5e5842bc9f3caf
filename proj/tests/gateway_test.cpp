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

#include <thread>

#include <gtest/gtest.h>

#include "reasondrive/transports.hpp"
#include "test_support.hpp"

namespace reasondrive {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;

CompletionRequest Request(const std::string& text, const std::string& model = "m") {
  return CompletionRequest{model, {ChatMessage{"user", text, {}}}, 0.7, 64};
}

GatewayOptions Options(const TempDir& dir) {
  GatewayOptions o;
  o.cache_dir = dir / "cache";
  return o;
}

TEST(RequestKeyTest, Sensitivity) {
  const CompletionRequest base{
      "m", {ChatMessage{"system", "a", {}}, ChatMessage{"user", "b", {}}}, 0.7, 64};
  const std::string key = base.request_key();
  EXPECT_EQ(key.size(), 64u);
  EXPECT_EQ(base.request_key(), key);

  CompletionRequest other = base;
  other.messages[1].text = "c";
  EXPECT_NE(other.request_key(), key);
  other = base;
  other.model = "m2";
  EXPECT_NE(other.request_key(), key);
  other = base;
  other.temperature = 0.0;
  EXPECT_NE(other.request_key(), key);
  other = base;
  std::swap(other.messages[0], other.messages[1]);
  EXPECT_NE(other.request_key(), key);
}

TEST(RequestKeyTest, ImagesHashedByContent) {
  TempDir dir;
  testing::WriteText(dir / "a.jpg", "one");
  testing::WriteText(dir / "b.jpg", "one");
  CompletionRequest a = Request("x");
  a.messages[0].images = {dir / "a.jpg"};
  CompletionRequest b = Request("x");
  b.messages[0].images = {dir / "b.jpg"};
  EXPECT_EQ(a.request_key(), b.request_key());
  testing::WriteText(dir / "b.jpg", "two");
  EXPECT_NE(a.request_key(), b.request_key());
}

TEST(GatewayTest, CannedResponse) {
  TempDir dir;
  auto mock = MockTransport::Canned("ok");
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  const CompletionResult r = gw.complete(Request("hi"));
  EXPECT_EQ(r.text, "ok");
  EXPECT_FALSE(r.from_cache);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(r.network_calls, 1);
}

TEST(GatewayTest, CacheHitMakesNoNetworkCall) {
  TempDir dir;
  auto mock = MockTransport::Canned("cached text\nwith bytes \xE2\x9C\x93");
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  const CompletionResult first = gw.complete(Request("hi"));
  const CompletionResult second = gw.complete(Request("hi"));
  EXPECT_EQ(mock->calls(), 1);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(second.network_calls, 0);
  EXPECT_EQ(second.text, first.text);

  // A new gateway over the same directory still hits the cache.
  Gateway again(mock, Options(dir), std::make_shared<FakeClock>());
  EXPECT_EQ(again.complete(Request("hi")).text, first.text);
  EXPECT_EQ(mock->calls(), 1);
  EXPECT_EQ(again.cache_hits(), 1);
}

TEST(GatewayTest, RefreshBypassesCacheRead) {
  TempDir dir;
  auto mock = MockTransport::Scripted({{200, "first", {}, ""}, {200, "second", {}, ""}});
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  EXPECT_EQ(gw.complete(Request("x")).text, "first");
  EXPECT_EQ(gw.complete(Request("x"), CallOptions{.refresh = true}).text, "second");
  EXPECT_EQ(gw.complete(Request("x")).text, "second");
  EXPECT_EQ(mock->calls(), 2);
}

TEST(GatewayTest, RetriesOn429) {
  TempDir dir;
  auto clock = std::make_shared<FakeClock>();
  auto mock = MockTransport::Scripted({{429, "", {}, "slow down"}, {200, "done", {}, ""}});
  Gateway gw(mock, Options(dir), clock);
  const CompletionResult r = gw.complete(Request("x"));
  EXPECT_EQ(r.text, "done");
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(clock->now().time_since_epoch(), 500ms);
}

TEST(GatewayTest, BackoffIsExponentialAndCapped) {
  TempDir dir;
  auto clock = std::make_shared<FakeClock>();
  auto mock = MockTransport::Scripted({{503, "", {}, ""}});
  GatewayOptions o = Options(dir);
  o.max_retries = 4;
  o.base_backoff = 100ms;
  o.max_backoff = 300ms;
  Gateway gw(mock, o, clock);
  try {
    gw.complete(Request("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExhaustedRetries);
  }
  EXPECT_EQ(mock->calls(), 5);
  // 100 + 200 + 300 + 300
  EXPECT_EQ(clock->now().time_since_epoch(), 900ms);
}

TEST(GatewayTest, AuthFailureIsNotRetried) {
  TempDir dir;
  auto mock = MockTransport::Scripted({{401, "", {}, "bad key"}});
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  try {
    gw.complete(Request("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuthFailed);
  }
  EXPECT_EQ(mock->calls(), 1);
}

TEST(GatewayTest, ClientErrorIsNotRetried) {
  TempDir dir;
  auto mock = MockTransport::Scripted({{400, "", {}, "bad request"}});
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  try {
    gw.complete(Request("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportError);
  }
  EXPECT_EQ(mock->calls(), 1);
}

TEST(GatewayTest, NoResponseIsTransportError) {
  TempDir dir;
  auto mock = MockTransport::Scripted({{0, "", {}, "connection refused"}});
  GatewayOptions o = Options(dir);
  o.max_retries = 1;
  Gateway gw(mock, o, std::make_shared<FakeClock>());
  try {
    gw.complete(Request("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportError);
  }
  EXPECT_EQ(mock->calls(), 2);
}

TEST(GatewayTest, BudgetCap) {
  TempDir dir;
  auto mock = std::make_shared<MockTransport>([](const CompletionRequest&) {
    return TransportReply{200, "x", {60, 40}, ""};
  });
  GatewayOptions o = Options(dir);
  o.max_total_tokens = 150;
  Gateway gw(mock, o, std::make_shared<FakeClock>());
  gw.complete(Request("a"));
  gw.complete(Request("b"));
  EXPECT_EQ(gw.total_usage().total(), 200);
  try {
    gw.complete(Request("c"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  // Cached answers stay available.
  EXPECT_EQ(gw.complete(Request("a")).text, "x");
}

TEST(GatewayTest, CacheDisabledWhenDirEmpty) {
  auto mock = MockTransport::Canned("ok");
  Gateway gw(mock, GatewayOptions{}, std::make_shared<FakeClock>());
  gw.complete(Request("x"));
  gw.complete(Request("x"));
  EXPECT_EQ(mock->calls(), 2);
}

TEST(GatewayBatchTest, ConcurrencyBound) {
  TempDir dir;
  auto mock = MockTransport::Canned("ok");
  mock->set_latency(20ms);
  Gateway gw(mock, Options(dir));
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(Request("req " + std::to_string(i)));
  const auto items = gw.complete_batch(reqs, 3);
  ASSERT_EQ(items.size(), 10u);
  for (const BatchItem& item : items) EXPECT_TRUE(item.ok());
  EXPECT_EQ(mock->calls(), 10);
  EXPECT_LE(mock->peak_in_flight(), 3);
  EXPECT_GE(mock->peak_in_flight(), 2);
}

TEST(GatewayBatchTest, FailureStaysAtItsIndex) {
  TempDir dir;
  auto mock = std::make_shared<MockTransport>([](const CompletionRequest& r) {
    if (r.messages[0].text == "req 4") return TransportReply{401, "", {}, "denied"};
    return TransportReply{200, "ok " + r.messages[0].text, {}, ""};
  });
  Gateway gw(mock, Options(dir), std::make_shared<FakeClock>());
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(Request("req " + std::to_string(i)));
  const auto items = gw.complete_batch(reqs, 3);
  for (int i = 0; i < 10; ++i) {
    if (i == 4) {
      ASSERT_FALSE(items[i].ok());
      EXPECT_EQ(items[i].error->code(), ErrorCode::kAuthFailed);
    } else {
      ASSERT_TRUE(items[i].ok());
      EXPECT_EQ(items[i].result->text, "ok req " + std::to_string(i));
    }
  }
}

TEST(GatewayBatchTest, EmptyAndInvalid) {
  auto mock = MockTransport::Canned("ok");
  Gateway gw(mock, GatewayOptions{}, std::make_shared<FakeClock>());
  EXPECT_TRUE(gw.complete_batch({}, 3).empty());
  EXPECT_THROW(gw.complete_batch({Request("x")}, 0), Error);
}

TEST(GatewayBatchTest, DuplicateRequestsCoalesce) {
  TempDir dir;
  auto mock = MockTransport::Canned("ok");
  mock->set_latency(30ms);
  Gateway gw(mock, Options(dir));
  std::vector<CompletionRequest> reqs(6, Request("same"));
  const auto items = gw.complete_batch(reqs, 6);
  for (const BatchItem& item : items) ASSERT_TRUE(item.ok());
  EXPECT_EQ(mock->calls(), 1);
}

TEST(RateLimiterTest, NoWindowExceedsLimit) {
  for (int limit : {1, 3, 5}) {
    auto clock = std::make_shared<FakeClock>();
    auto mock = MockTransport::Canned("ok");
    mock->set_clock(clock);
    GatewayOptions o;
    o.rate_limit_per_second = limit;
    Gateway gw(mock, o, clock);
    for (int i = 0; i < 20; ++i) {
      gw.complete(Request("r" + std::to_string(i)));
      clock->advance(std::chrono::milliseconds(37 * (i % 4)));
    }
    const auto times = mock->dispatch_times();
    ASSERT_EQ(times.size(), 20u);
    for (std::size_t i = 0; i < times.size(); ++i) {
      int in_window = 0;
      for (std::size_t j = i; j < times.size() && times[j] < times[i] + 1s; ++j) {
        ++in_window;
      }
      EXPECT_LE(in_window, limit) << "limit " << limit << " at dispatch " << i;
    }
  }
}

}  // namespace
}  // namespace reasondrive
