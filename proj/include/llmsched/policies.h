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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "llmsched/kvmem.h"
#include "llmsched/request.h"
#include "llmsched/types.h"

namespace llmsched {

// Snapshot handed to a policy at a scheduling instant.
struct SchedulingContext {
  std::span<const Request* const> waiting;  // queue order
  std::span<const Request* const> running;  // dispatch order
  const KvBlockPool* pool = nullptr;
  Seconds clock = 0.0;
  // Batch tokens still free for new prefill work in the coming iteration,
  // after decodes and already-running prefills are served.
  TokenCount token_budget_left = 0;
  // Concurrency limit; unlimited when empty.
  std::optional<std::size_t> max_running;
};

struct Admission {
  RequestId id = 0;
  // KV tokens allocated at dispatch (at least the pending prefill).
  TokenCount reserve_tokens = 0;

  bool operator==(const Admission&) const = default;
};

struct PolicyDecision {
  std::vector<Admission> dispatch;  // in dispatch order
  std::vector<RequestId> preempt;

  std::vector<RequestId> dispatch_ids() const;
};

// dispatch is a subset of waiting, preempt a subset of running, no repeats.
bool is_valid_decision(const PolicyDecision& decision,
                       const SchedulingContext& ctx);

// Strict FIFO: admits from the queue head while the pending prefill fits the
// free blocks, a running slot is free and the token budget is not exhausted.
PolicyDecision fcfs_select(const SchedulingContext& ctx);

struct NoPreemptParams {
  TokenCount max_context = 8192;
  TokenCount max_output = 2048;
};

// Worst-case KV reservation: min(max_context, prompt_len + max_output).
TokenCount nopreempt_reservation(const Request& r, const NoPreemptParams& params);

// FIFO that admits a request only once its worst-case reservation fits.
PolicyDecision nopreempt_select(const SchedulingContext& ctx,
                                const NoPreemptParams& params);

struct TrailParams {
  double c = 0.0;  // in [0, 1]
};

// Shortest-remaining-output first with oracle output lengths. Inadmissible
// requests are skipped. A running q may be evicted for a waiting r only if
// remaining(r) < remaining(q) and generated(q) / output_len(q) < c.
PolicyDecision trail_plus_select(const SchedulingContext& ctx,
                                 const TrailParams& params);

// True when the running request `q` may be preempted in favour of `r`.
bool trail_preemptible(const Request& q, const Request& r, double c);

struct LarryParams {
  double alpha = 1.0;
};

// alpha * wait_time - queue_len * memory, with wait_time measured from the
// request's arrival and memory its pending prefill in tokens.
double larry_score(const Request& r, Seconds clock, std::size_t queue_len,
                   double alpha);

// Scores the queue once per instant, sorts by descending score (ties: earlier
// arrival, then lower id) and dispatches in that order until the first request
// that does not fit the free memory or the exhausted token budget.
PolicyDecision larry_select(const SchedulingContext& ctx, const LarryParams& params);

enum class PolicyKind { kFcfs, kNoPreempt, kTrailPlus, kLarry };

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kFcfs;
  LarryParams larry;
  TrailParams trail;
  NoPreemptParams nopreempt;
};

void validate(const PolicyConfig& config);

PolicyDecision select(const PolicyConfig& config, const SchedulingContext& ctx);

}  // namespace llmsched
