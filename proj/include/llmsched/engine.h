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
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "llmsched/costmodel.h"
#include "llmsched/kvmem.h"
#include "llmsched/policies.h"
#include "llmsched/record.h"
#include "llmsched/request.h"
#include "llmsched/workload.h"

namespace llmsched {

struct EngineConfig {
  std::int64_t total_blocks = 0;
  TokenCount block_size = kDefaultBlockSize;
  TokenCount max_tokens_per_batch = 1024;
  std::optional<std::size_t> max_running;  // unlimited when empty
  CostParams cost;
  bool record_events = true;
};

void validate(const EngineConfig& config);

struct BatchPlan {
  std::vector<RequestId> decode_ids;
  std::vector<std::pair<RequestId, TokenCount>> prefill_chunks;
  TokenCount total_tokens = 0;
};

struct IterationReport {
  Seconds start_time = 0.0;
  Seconds latency_s = 0.0;
  BatchPlan plan;
  std::vector<RequestId> dispatched;
  std::vector<RequestId> preempted;
  std::vector<RequestId> first_tokens;
  std::vector<RequestId> finished;
};

enum class EventKind { kDispatch, kPreempt, kFirstToken, kFinish, kCapacityWarning };

std::string_view to_string(EventKind kind);

struct EngineEvent {
  EventKind kind = EventKind::kDispatch;
  Seconds time = 0.0;
  RequestId id = 0;
  // dispatch: reserved tokens; preempt: tokens generated so far;
  // first_token / finish: tokens generated; warning: tokens requested.
  std::int64_t detail = 0;

  bool operator==(const EngineEvent&) const = default;
};

// One event per line: event,time,request_id,detail
void write_event_log(std::ostream& out, std::span<const EngineEvent> events);

struct EngineStats {
  std::uint64_t iterations = 0;
  std::uint64_t preemptions = 0;
  std::uint64_t capacity_warnings = 0;
  TokenCount max_batch_tokens = 0;
  TokenCount total_batch_tokens = 0;
  Seconds busy_time = 0.0;
};

// Discrete-event model of one serving engine with continuous batching,
// chunked prefill, paged KV memory and preemption by recompute.
//
// Each step() is one scheduling instant followed by one forward pass:
//   1. the policy picks dispatches (and, for TRAIL+, preemptions);
//   2. decoding requests get one token each, then prefilling requests get
//      chunks in dispatch order until max_tokens_per_batch is reached;
//   3. the clock advances by the iteration latency;
//   4. progress is applied in dispatch order. A request whose last prefill
//      chunk ran emits its next token at iteration end. A decode that cannot
//      grow its KV evicts the most recently dispatched other request until
//      the grow fits.
//
// Arrivals become visible at iteration boundaries only. Single-threaded.
class Engine {
 public:
  Engine(EngineConfig config, PolicyConfig policy);

  // Appends to the waiting queue with enqueue_time = clock(). Throws
  // std::logic_error for duplicate ids, non-waiting requests or requests
  // that have not arrived yet.
  void enqueue(Request request);

  // Queues an arrival that becomes visible at the first boundary at or after
  // its arrival time. Submissions must come in arrival order.
  void submit(Request request);

  IterationReport step();

  // Replays a trace on a fresh engine. Request ids are trace indices.
  // Throws std::invalid_argument when a request can never fit the pool and
  // std::runtime_error if the scheduler stalls.
  std::vector<MetricsRecord> run(std::span<const TraceEntry> trace);

  bool has_work() const;
  // Start time of the next step: the clock while requests are queued or
  // running, else the first pending arrival. Infinity when there is no work.
  Seconds next_event_time() const;
  Seconds clock() const { return clock_; }
  const EngineConfig& config() const { return config_; }
  const PolicyConfig& policy() const { return policy_; }
  const KvBlockPool& pool() const { return pool_; }
  const EngineStats& stats() const { return stats_; }
  const std::vector<EngineEvent>& events() const { return events_; }

  std::vector<const Request*> waiting() const;
  std::vector<const Request*> running() const;
  std::vector<const Request*> inbox() const;
  const Request& request(RequestId id) const;

  // Records of all finished requests, ordered by id.
  std::vector<MetricsRecord> records() const;

  void set_server_index(std::size_t index) { server_index_ = index; }

  // Throws std::invalid_argument if the request can never be served alone.
  void check_feasible(const Request& r) const;

 private:
  Request& mutable_request(RequestId id);
  void admit_arrivals();
  void apply_policy(IterationReport& report);
  BatchPlan form_batch() const;
  void apply_progress(const BatchPlan& plan, IterationReport& report);
  bool ensure_kv(Request& r, TokenCount tokens, IterationReport& report);
  std::vector<RequestId> preempt_for_memory(std::int64_t needed_blocks,
                                            RequestId grower,
                                            IterationReport& report);
  void evict(Request& r, IterationReport& report);
  void emit_token(Request& r, IterationReport& report);
  void finish(Request& r, IterationReport& report);
  void log(EventKind kind, RequestId id, std::int64_t detail);
  void check_invariants() const;

  EngineConfig config_;
  PolicyConfig policy_;
  KvBlockPool pool_;
  Seconds clock_ = 0.0;
  std::uint64_t next_dispatch_seq_ = 1;
  std::size_t server_index_ = 0;

  std::unordered_map<RequestId, Request> requests_;
  std::deque<RequestId> inbox_;
  std::deque<RequestId> waiting_;
  std::vector<RequestId> running_;  // dispatch order
  std::vector<EngineEvent> events_;
  EngineStats stats_;
};

}  // namespace llmsched
