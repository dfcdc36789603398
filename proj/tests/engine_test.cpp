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
#include <sstream>

#include "llmsched/engine.h"
#include "test_util.h"

namespace llmsched {
namespace {

using testing::policy_of;
using testing::simple_cost;
using testing::small_engine;

TEST(EngineTest, EnqueueBasics) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 10, 1));
  EXPECT_EQ(e.waiting().size(), 1u);
  EXPECT_THROW(e.enqueue(Request::make(0, 0.0, 10, 1)), std::logic_error);
  EXPECT_THROW(e.enqueue(Request::make(1, 5.0, 10, 1)), std::logic_error);
}

TEST(EngineTest, SameArrivalKeepsIdOrder) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  for (RequestId id : {3, 4}) e.submit(Request::make(id, 0.0, 10, 1));
  const IterationReport r = e.step();
  EXPECT_EQ(r.dispatched, (std::vector<RequestId>{3, 4}));
}

TEST(EngineTest, ShortRequestTakesTwoSteps) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 100, 2));
  const IterationReport first = e.step();
  EXPECT_EQ(first.plan.total_tokens, 100);
  EXPECT_EQ(first.first_tokens, (std::vector<RequestId>{0}));
  EXPECT_TRUE(first.finished.empty());
  const IterationReport second = e.step();
  EXPECT_EQ(second.plan.total_tokens, 1);
  EXPECT_EQ(second.plan.decode_ids, (std::vector<RequestId>{0}));
  EXPECT_EQ(second.finished, (std::vector<RequestId>{0}));
  EXPECT_FALSE(e.has_work());
}

TEST(EngineTest, LongPromptIsChunked) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 2000, 3));
  const IterationReport a = e.step();
  ASSERT_EQ(a.plan.prefill_chunks.size(), 1u);
  EXPECT_EQ(a.plan.prefill_chunks[0].second, 1024);
  EXPECT_TRUE(a.first_tokens.empty());
  const IterationReport b = e.step();
  EXPECT_EQ(b.plan.prefill_chunks[0].second, 976);
  EXPECT_EQ(b.first_tokens, (std::vector<RequestId>{0}));
}

TEST(EngineTest, DecodesComeFirstInTheBatch) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  for (RequestId id = 0; id < 10; ++id) e.enqueue(Request::make(id, 0.0, 8, 50));
  e.step();  // prefill all ten
  e.enqueue(Request::make(10, 0.0, 2000, 5));
  const IterationReport r = e.step();
  EXPECT_EQ(r.plan.decode_ids.size(), 10u);
  ASSERT_EQ(r.plan.prefill_chunks.size(), 1u);
  EXPECT_EQ(r.plan.prefill_chunks[0].second, 1014);
  EXPECT_EQ(r.plan.total_tokens, 1024);
}

TEST(EngineTest, DecodeTokensCappedByBudget) {
  Engine e(small_engine(1000, 4), policy_of(PolicyKind::kFcfs));
  for (RequestId id = 0; id < 6; ++id) e.enqueue(Request::make(id, 0.0, 1, 3));
  while (e.has_work()) {
    EXPECT_LE(e.step().plan.total_tokens, 4);
  }
  EXPECT_EQ(e.records().size(), 6u);
}

TEST(EngineTest, GrowthPreemptsLatestOther) {
  EngineConfig cfg = small_engine(2);
  Engine e(cfg, policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 16, 5));
  e.enqueue(Request::make(1, 0.0, 16, 5));
  e.step();  // both prefilled in one block each
  const IterationReport r = e.step();
  EXPECT_EQ(r.preempted, (std::vector<RequestId>{1}));
  EXPECT_EQ(e.request(0).generated, 2);
  const Request& victim = e.request(1);
  EXPECT_EQ(victim.state, RequestState::kWaiting);
  EXPECT_EQ(victim.preempt_count, 1);
  EXPECT_EQ(victim.pending_prefill(), 17);
  EXPECT_EQ(e.waiting().front()->id, 1u);
}

TEST(EngineTest, VictimRecomputesPromptPlusGenerated) {
  // Request 0 needs a fifth block exactly when request 1 has 50 tokens out.
  Engine e(small_engine(14), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 15, 60));
  e.enqueue(Request::make(1, 0.0, 100, 60));
  IterationReport r;
  do {
    r = e.step();
  } while (r.preempted.empty());
  EXPECT_EQ(r.preempted, (std::vector<RequestId>{1}));
  EXPECT_EQ(e.request(1).generated, 50);
  EXPECT_EQ(e.request(1).pending_prefill(), 150);
  while (e.has_work()) e.step();
  const std::vector<MetricsRecord> recs = e.records();
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_GE(recs[1].preempt_count, 1);
}

TEST(EngineTest, PreemptedRequestsReturnToQueueHead) {
  Engine e(small_engine(2), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 16, 5));
  e.enqueue(Request::make(1, 0.0, 16, 5));
  e.step();
  e.enqueue(Request::make(2, e.clock(), 1, 1));
  e.step();
  const std::vector<const Request*> q = e.waiting();
  ASSERT_GE(q.size(), 2u);
  EXPECT_EQ(q[0]->id, 1u);
  EXPECT_EQ(q[1]->id, 2u);
}

TEST(EngineTest, SoleRequestThatCannotGrowIsParked) {
  Engine e(small_engine(1), policy_of(PolicyKind::kFcfs));
  e.enqueue(Request::make(0, 0.0, 16, 3));
  e.step();
  const IterationReport r = e.step();
  EXPECT_EQ(r.preempted, (std::vector<RequestId>{0}));
  EXPECT_EQ(e.stats().capacity_warnings, 1u);
  EXPECT_EQ(e.request(0).state, RequestState::kWaiting);
  EXPECT_THROW(e.step(), std::runtime_error);  // 17 tokens never fit
}

TEST(EngineTest, RunRejectsInfeasibleRequests) {
  Engine e(small_engine(1), policy_of(PolicyKind::kFcfs));
  const Trace t{{0.0, 16, 3}};
  EXPECT_THROW(e.run(t), std::invalid_argument);
}

TEST(EngineTest, EmptyTraceGivesNoRecords) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  EXPECT_TRUE(e.run(Trace{}).empty());
}

TEST(EngineTest, SingleRequestTiming) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  const Trace t{{0.5, 2000, 4}};
  const std::vector<MetricsRecord> recs = e.run(t);
  ASSERT_EQ(recs.size(), 1u);
  const CostParams p = simple_cost();
  const double chunk1 = iteration_latency(p, 1024, 0);
  const double chunk2 = iteration_latency(p, 976, 1024);
  EXPECT_DOUBLE_EQ(recs[0].ttft(), chunk1 + chunk2);
  double tgt = chunk1 + chunk2;
  for (TokenCount ctx = 2000; ctx < 2003; ++ctx) tgt += iteration_latency(p, 1, ctx);
  EXPECT_NEAR(recs[0].tgt(), tgt, 1e-12);
}

TEST(EngineTest, ArrivalsWaitForIterationBoundary) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  const Trace t{{0.0, 1000, 1}, {0.001, 10, 1}};
  const std::vector<MetricsRecord> recs = e.run(t);
  const double first_iter = iteration_latency(simple_cost(), 1000, 0);
  EXPECT_DOUBLE_EQ(recs[0].first_token_time, first_iter);
  EXPECT_GT(recs[1].first_token_time, first_iter);
}

TEST(EngineTest, IdleEngineJumpsToNextArrival) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  const Trace t{{0.0, 10, 1}, {50.0, 10, 1}};
  const std::vector<MetricsRecord> recs = e.run(t);
  EXPECT_EQ(recs[1].first_token_time, 50.0 + iteration_latency(simple_cost(), 10, 0));
  EXPECT_NEAR(recs[1].ttft(), iteration_latency(simple_cost(), 10, 0), 1e-12);
}

TEST(EngineTest, EventLogHasOneLinePerEvent) {
  Engine e(small_engine(), policy_of(PolicyKind::kFcfs));
  e.run(Trace{{0.0, 10, 2}});
  std::ostringstream out;
  write_event_log(out, e.events());
  EXPECT_EQ(out.str(),
            "event,time,request_id,detail\n"
            "dispatch,0,0,10\n"
            "first_token,0.01,0,1\n"
            "finish,0.02001,0,2\n");
}

TEST(EngineTest, ConfigValidation) {
  EngineConfig c = small_engine();
  c.total_blocks = 0;
  EXPECT_THROW(Engine(c, PolicyConfig{}), std::invalid_argument);
  c = small_engine();
  c.max_tokens_per_batch = 0;
  EXPECT_THROW(Engine(c, PolicyConfig{}), std::invalid_argument);
  c = small_engine();
  c.max_running = 0;
  EXPECT_THROW(Engine(c, PolicyConfig{}), std::invalid_argument);
}

// Runs random traces step by step and checks the engine invariants.
class EngineInvariantTest : public ::testing::TestWithParam<PolicyKind> {};

TEST_P(EngineInvariantTest, RandomRunsHoldInvariants) {
  std::mt19937_64 rng(1000 + static_cast<int>(GetParam()));
  for (int k = 0; k < 60; ++k) {
    const TokenCount cap = 1 + static_cast<TokenCount>(rng() % 300);
    EngineConfig cfg = small_engine(30 + static_cast<std::int64_t>(rng() % 60), cap);
    if (rng() % 3 == 0) cfg.max_running = 1 + rng() % 6;
    PolicyConfig pc = policy_of(GetParam());
    pc.trail.c = (rng() % 5) / 4.0;
    pc.larry.alpha = (rng() % 3) * 50.0;
    pc.nopreempt = {400, 200};
    const Trace trace = testing::random_trace(rng, 25, 0.01, 200, 200);

    Engine e(cfg, pc);
    std::size_t first_tokens = 0;
    Seconds last = -1.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      Request r = Request::make(i, trace[i].arrival_time, trace[i].prompt_len,
                                trace[i].output_len);
      e.check_feasible(r);
      e.submit(std::move(r));
    }
    std::size_t steps = 0;
    while (e.has_work()) {
      const IterationReport rep = e.step();
      ASSERT_LE(rep.plan.total_tokens, cap);
      ASSERT_GT(e.clock(), last);
      last = e.clock();
      ASSERT_TRUE(e.pool().conserves());
      first_tokens += rep.first_tokens.size();
      for (const Request* w : e.waiting()) ASSERT_FALSE(e.pool().contains(w->id));
      ASSERT_LT(++steps, 200000u);
    }
    EXPECT_EQ(first_tokens, trace.size());
    const std::vector<MetricsRecord> recs = e.records();
    ASSERT_EQ(recs.size(), trace.size());
    for (const MetricsRecord& m : recs) {
      EXPECT_EQ(e.request(m.id).generated, m.output_len);
      EXPECT_LE(m.arrival_time, m.first_token_time);
      EXPECT_LE(m.first_token_time, m.finish_time);
    }
    if (GetParam() == PolicyKind::kNoPreempt) {
      EXPECT_EQ(e.stats().preemptions, 0u);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllPolicies, EngineInvariantTest,
                         ::testing::Values(PolicyKind::kFcfs, PolicyKind::kNoPreempt,
                                           PolicyKind::kTrailPlus, PolicyKind::kLarry),
                         [](const auto& info) {
                           return std::string(to_string(info.param));
                         });

TEST(EngineTest, RunIsDeterministic) {
  std::mt19937_64 rng(3);
  const Trace trace = testing::random_trace(rng, 200, 0.005, 800, 300);
  Engine a(small_engine(200), policy_of(PolicyKind::kLarry));
  Engine b(small_engine(200), policy_of(PolicyKind::kLarry));
  EXPECT_EQ(a.run(trace), b.run(trace));
  EXPECT_EQ(a.events(), b.events());
}

TEST(EngineTest, MatchesReferenceOnRandomTraces) {
  std::mt19937_64 rng(44);
  for (int k = 0; k < 200; ++k) {
    const auto kind = static_cast<PolicyKind>(rng() % 4);
    EngineConfig cfg = small_engine(20 + static_cast<std::int64_t>(rng() % 40),
                                    8 + static_cast<TokenCount>(rng() % 200));
    PolicyConfig pc = policy_of(kind);
    pc.trail.c = (rng() % 3) / 2.0;
    pc.larry.alpha = (rng() % 4) * 100.0;
    pc.nopreempt = {300, 150};
    const Trace trace = testing::random_trace(rng, 12, 0.02, 150, 150);
    Engine e(cfg, pc);
    e.run(trace);
    const refsim::Outcome ref =
        refsim::simulate(testing::ref_config(cfg, pc), testing::ref_jobs(trace));
    ASSERT_EQ(testing::as_ref_events(e.events()), ref.events)
        << "policy " << to_string(kind) << " instance " << k;
  }
}

}  // namespace
}  // namespace llmsched
