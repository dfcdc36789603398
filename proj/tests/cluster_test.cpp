/* Copyright 2026 The llmsched Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "llmsched/cluster.h"
#include "test_util.h"

namespace llmsched {
namespace {

ClusterConfig base(std::size_t n, BalancerKind kind, PolicyKind policy) {
  ClusterConfig c;
  c.n_servers = n;
  c.engine = testing::small_engine(300);
  c.policy.kind = policy;
  c.balancer.kind = kind;
  c.seed = 5;
  return c;
}

TEST(SnapshotStatsTest, Examples) {
  Engine idle(testing::small_engine(100), PolicyConfig{});
  EXPECT_EQ(snapshot_stats(idle), (ServerStats{0, 1600, 0}));

  Engine queued(testing::small_engine(100), PolicyConfig{});
  queued.enqueue(Request::make(0, 0.0, 500, 1));
  EXPECT_EQ(snapshot_stats(queued).queued_tokens, 500);

  Engine busy(testing::small_engine(100), PolicyConfig{});
  busy.enqueue(Request::make(0, 0.0, 160, 5));
  busy.step();
  const ServerStats s = snapshot_stats(busy);
  EXPECT_EQ(s.free_mem_tokens, (100 - 10) * 16);
  EXPECT_EQ(s.in_flight, 1);
  EXPECT_EQ(s.queued_tokens, 0);

  // A 3000-token prompt under a 1024-token cap still has 1976 tokens to go.
  Engine chunked(testing::small_engine(400), PolicyConfig{});
  chunked.enqueue(Request::make(0, 0.0, 3000, 5));
  chunked.step();
  EXPECT_EQ(snapshot_stats(chunked).queued_tokens, 1976);
}

TEST(ClusterTest, SingleServerMatchesBareEngine) {
  std::mt19937_64 rng(1);
  for (PolicyKind p : {PolicyKind::kFcfs, PolicyKind::kNoPreempt,
                       PolicyKind::kTrailPlus, PolicyKind::kLarry}) {
    for (BalancerKind b : {BalancerKind::kRoundRobin, BalancerKind::kRandom,
                           BalancerKind::kP2c, BalancerKind::kSal}) {
      const Trace t = testing::random_trace(rng, 150, 0.01, 600, 200);
      ClusterConfig c = base(1, b, p);
      c.engine.total_blocks = 120;
      c.policy.nopreempt = {1000, 300};
      Engine e(c.engine, c.policy);
      EXPECT_EQ(run_cluster(c, t).records, e.run(t));
    }
  }
}

TEST(ClusterTest, RoundRobinAlternates) {
  Trace t;
  for (int i = 0; i < 20; ++i) t.push_back({i * 0.1, 32, 4});
  const ClusterResult r = run_cluster(base(2, BalancerKind::kRoundRobin, PolicyKind::kFcfs), t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(r.routes[i], i % 2);
    EXPECT_EQ(r.records[i].server, i % 2);
  }
  EXPECT_EQ(r.servers[0].routed_requests, 10u);
  EXPECT_EQ(routed_token_imbalance(r), 0);
}

TEST(ClusterTest, ConservesRequestsAndIsDeterministic) {
  std::mt19937_64 rng(2);
  for (BalancerKind b : {BalancerKind::kRoundRobin, BalancerKind::kRandom,
                         BalancerKind::kP2c, BalancerKind::kSal}) {
    const Trace t = testing::random_trace(rng, 400, 0.002, 800, 200);
    const ClusterConfig c = base(3, b, PolicyKind::kLarry);
    const ClusterResult a = run_cluster(c, t);
    const ClusterResult again = run_cluster(c, t);
    EXPECT_EQ(a.records, again.records);
    EXPECT_EQ(a.routes, again.routes);
    ASSERT_EQ(a.records.size(), t.size());
    std::set<RequestId> ids;
    TokenCount tokens = 0;
    for (const MetricsRecord& m : a.records) {
      ids.insert(m.id);
      EXPECT_EQ(m.server, a.routes[m.id]);
    }
    for (const ServerSummary& s : a.servers) tokens += s.routed_tokens;
    TokenCount expected = 0;
    for (const TraceEntry& e : t) expected += e.prompt_len + e.output_len;
    EXPECT_EQ(ids.size(), t.size());
    EXPECT_EQ(tokens, expected);
  }
}

TEST(ClusterTest, SalSpreadsIdenticalBurst) {
  Trace t;
  for (int i = 0; i < 4; ++i) t.push_back({0.0, 2000, 10});
  ClusterConfig c = base(4, BalancerKind::kSal, PolicyKind::kFcfs);
  const ClusterResult r = run_cluster(c, t);
  EXPECT_EQ(r.routes, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(ClusterTest, InfeasibleRequestRejected) {
  ClusterConfig c = base(2, BalancerKind::kRoundRobin, PolicyKind::kFcfs);
  c.engine.total_blocks = 2;
  EXPECT_THROW(run_cluster(c, Trace{{0.0, 100, 1}}), std::invalid_argument);
}

TEST(ClusterTest, HeterogeneousServers) {
  ClusterConfig c = base(2, BalancerKind::kRoundRobin, PolicyKind::kFcfs);
  c.server_engines = {testing::small_engine(300), testing::small_engine(600)};
  Trace t;
  for (int i = 0; i < 10; ++i) t.push_back({i * 0.05, 100, 5});
  const ClusterResult r = run_cluster(c, t);
  EXPECT_EQ(r.records.size(), 10u);
  c.server_engines.pop_back();
  EXPECT_THROW(run_cluster(c, t), std::invalid_argument);
}

}  // namespace
}  // namespace llmsched
