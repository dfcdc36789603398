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

#include "llmsched/engine.h"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace llmsched {

void validate(const EngineConfig& config) {
  if (config.total_blocks < 1) {
    throw std::invalid_argument(
        fmt::format("total_blocks must be >= 1, got {}", config.total_blocks));
  }
  if (config.block_size < 1) {
    throw std::invalid_argument(
        fmt::format("block_size must be >= 1, got {}", config.block_size));
  }
  if (config.max_tokens_per_batch < 1) {
    throw std::invalid_argument(fmt::format(
        "max_tokens_per_batch must be >= 1, got {}", config.max_tokens_per_batch));
  }
  if (config.max_running && *config.max_running < 1) {
    throw std::invalid_argument("max_running must be >= 1 when set");
  }
  validate(config.cost);
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kDispatch:
      return "dispatch";
    case EventKind::kPreempt:
      return "preempt";
    case EventKind::kFirstToken:
      return "first_token";
    case EventKind::kFinish:
      return "finish";
    case EventKind::kCapacityWarning:
      return "capacity_warning";
  }
  return "dispatch";
}

void write_event_log(std::ostream& out, std::span<const EngineEvent> events) {
  out << "event,time,request_id,detail\n";
  for (const EngineEvent& e : events) {
    out << fmt::format("{},{},{},{}\n", to_string(e.kind), e.time, e.id, e.detail);
  }
}

Engine::Engine(EngineConfig config, PolicyConfig policy)
    : config_(std::move(config)),
      policy_(policy),
      pool_((validate(config_), config_.total_blocks), config_.block_size) {
  validate(policy_);
}

void Engine::check_feasible(const Request& r) const {
  if (r.prompt_len < 1 || r.output_len < 1) {
    throw std::invalid_argument(fmt::format(
        "request {}: prompt_len and output_len must be >= 1", r.id));
  }
  TokenCount peak = r.prompt_len + r.output_len - 1;
  if (policy_.kind == PolicyKind::kNoPreempt) {
    peak = std::max(peak, nopreempt_reservation(r, policy_.nopreempt));
  }
  if (blocks_needed(peak, config_.block_size) > config_.total_blocks) {
    throw std::invalid_argument(fmt::format(
        "request {} needs {} KV tokens but the pool holds {}", r.id, peak,
        pool_.capacity_tokens()));
  }
}

void Engine::enqueue(Request request) {
  if (request.state != RequestState::kWaiting) {
    throw std::logic_error(
        fmt::format("enqueue: request {} is not waiting", request.id));
  }
  if (request.arrival_time > clock_) {
    throw std::logic_error(fmt::format(
        "enqueue: request {} arrives at {} after clock {}", request.id,
        request.arrival_time, clock_));
  }
  if (requests_.contains(request.id)) {
    throw std::logic_error(fmt::format("enqueue: duplicate id {}", request.id));
  }
  request.enqueue_time = clock_;
  const RequestId id = request.id;
  requests_.emplace(id, std::move(request));
  waiting_.push_back(id);
}

void Engine::submit(Request request) {
  if (request.state != RequestState::kWaiting) {
    throw std::logic_error(
        fmt::format("submit: request {} is not waiting", request.id));
  }
  if (requests_.contains(request.id)) {
    throw std::logic_error(fmt::format("submit: duplicate id {}", request.id));
  }
  if (!inbox_.empty() &&
      requests_.at(inbox_.back()).arrival_time > request.arrival_time) {
    throw std::logic_error("submit: arrivals out of order");
  }
  const RequestId id = request.id;
  requests_.emplace(id, std::move(request));
  inbox_.push_back(id);
}

bool Engine::has_work() const {
  return !waiting_.empty() || !running_.empty() || !inbox_.empty();
}

Seconds Engine::next_event_time() const {
  if (!waiting_.empty() || !running_.empty()) return clock_;
  if (!inbox_.empty()) {
    return std::max(clock_, requests_.at(inbox_.front()).arrival_time);
  }
  return std::numeric_limits<Seconds>::infinity();
}

Request& Engine::mutable_request(RequestId id) {
  auto it = requests_.find(id);
  if (it == requests_.end()) {
    throw std::logic_error(fmt::format("unknown request {}", id));
  }
  return it->second;
}

const Request& Engine::request(RequestId id) const {
  auto it = requests_.find(id);
  if (it == requests_.end()) {
    throw std::out_of_range(fmt::format("unknown request {}", id));
  }
  return it->second;
}

std::vector<const Request*> Engine::waiting() const {
  std::vector<const Request*> out;
  out.reserve(waiting_.size());
  for (RequestId id : waiting_) out.push_back(&requests_.at(id));
  return out;
}

std::vector<const Request*> Engine::running() const {
  std::vector<const Request*> out;
  out.reserve(running_.size());
  for (RequestId id : running_) out.push_back(&requests_.at(id));
  return out;
}

std::vector<const Request*> Engine::inbox() const {
  std::vector<const Request*> out;
  out.reserve(inbox_.size());
  for (RequestId id : inbox_) out.push_back(&requests_.at(id));
  return out;
}

void Engine::log(EventKind kind, RequestId id, std::int64_t detail) {
  if (kind == EventKind::kCapacityWarning) ++stats_.capacity_warnings;
  if (config_.record_events) events_.push_back({kind, clock_, id, detail});
}

void Engine::admit_arrivals() {
  if (waiting_.empty() && running_.empty() && !inbox_.empty()) {
    clock_ = std::max(clock_, requests_.at(inbox_.front()).arrival_time);
  }
  while (!inbox_.empty() && requests_.at(inbox_.front()).arrival_time <= clock_) {
    Request& r = requests_.at(inbox_.front());
    r.enqueue_time = clock_;
    waiting_.push_back(r.id);
    inbox_.pop_front();
  }
}

void Engine::apply_policy(IterationReport& report) {
  const std::vector<const Request*> waiting_view = waiting();
  const std::vector<const Request*> running_view = running();

  TokenCount reserved = 0;
  for (const Request* r : running_view) {
    reserved += r->state == RequestState::kDecoding ? 1 : r->pending_prefill();
  }

  SchedulingContext ctx;
  ctx.waiting = waiting_view;
  ctx.running = running_view;
  ctx.pool = &pool_;
  ctx.clock = clock_;
  ctx.token_budget_left = std::max<TokenCount>(0, config_.max_tokens_per_batch - reserved);
  ctx.max_running = config_.max_running;

  PolicyDecision decision = select(policy_, ctx);
  if (!is_valid_decision(decision, ctx)) {
    throw std::logic_error("policy returned an invalid decision");
  }

  // Earlier-dispatched victims end up ahead in the queue.
  std::vector<Request*> victims;
  for (RequestId id : decision.preempt) victims.push_back(&mutable_request(id));
  std::sort(victims.begin(), victims.end(), [](const Request* a, const Request* b) {
    return a->dispatch_seq > b->dispatch_seq;
  });
  for (Request* v : victims) evict(*v, report);

  for (const Admission& a : decision.dispatch) {
    Request& r = mutable_request(a.id);
    if (pool_.try_allocate(r.id, a.reserve_tokens) != AllocStatus::kOk) {
      throw std::logic_error(fmt::format(
          "policy dispatched request {} without room for {} tokens", r.id,
          a.reserve_tokens));
    }
    waiting_.erase(std::find(waiting_.begin(), waiting_.end(), r.id));
    r.state = RequestState::kPrefilling;
    r.dispatch_seq = next_dispatch_seq_++;
    running_.push_back(r.id);
    report.dispatched.push_back(r.id);
    log(EventKind::kDispatch, r.id, a.reserve_tokens);
  }
}

BatchPlan Engine::form_batch() const {
  BatchPlan plan;
  TokenCount budget = config_.max_tokens_per_batch;
  for (RequestId id : running_) {
    if (budget == 0) break;
    if (requests_.at(id).state == RequestState::kDecoding) {
      plan.decode_ids.push_back(id);
      --budget;
    }
  }
  for (RequestId id : running_) {
    if (budget == 0) break;
    const Request& r = requests_.at(id);
    if (r.state != RequestState::kPrefilling) continue;
    const TokenCount chunk = std::min(r.pending_prefill(), budget);
    plan.prefill_chunks.emplace_back(id, chunk);
    budget -= chunk;
  }
  plan.total_tokens = config_.max_tokens_per_batch - budget;
  return plan;
}

void Engine::evict(Request& r, IterationReport& report) {
  pool_.free(r.id);
  running_.erase(std::find(running_.begin(), running_.end(), r.id));
  r.state = RequestState::kWaiting;
  ++r.preempt_count;
  r.prefill_target = r.prompt_len + r.generated;
  r.prefill_done = 0;
  r.context_len = 0;
  r.enqueue_time = clock_;
  // Back to the head, but behind earlier arrivals that are still waiting
  // (victims of earlier preemptions), so the queue keeps arrival order.
  auto pos = std::find_if(waiting_.begin(), waiting_.end(), [&](RequestId id) {
    const Request& w = requests_.at(id);
    return w.arrival_time > r.arrival_time ||
           (w.arrival_time == r.arrival_time && w.id > r.id);
  });
  waiting_.insert(pos, r.id);
  ++stats_.preemptions;
  report.preempted.push_back(r.id);
  log(EventKind::kPreempt, r.id, r.generated);
}

std::vector<RequestId> Engine::preempt_for_memory(std::int64_t needed_blocks,
                                                  RequestId grower,
                                                  IterationReport& report) {
  std::vector<RequestId> victims;
  while (pool_.free_blocks() < needed_blocks) {
    auto it = std::find_if(running_.rbegin(), running_.rend(),
                           [grower](RequestId id) { return id != grower; });
    if (it == running_.rend()) break;
    const RequestId id = *it;
    evict(mutable_request(id), report);
    victims.push_back(id);
  }
  if (pool_.free_blocks() < needed_blocks) {
    Request& g = mutable_request(grower);
    log(EventKind::kCapacityWarning, grower, g.context_len + 1);
    if (g.running()) {
      evict(g, report);
      victims.push_back(grower);
    }
  }
  return victims;
}

bool Engine::ensure_kv(Request& r, TokenCount tokens, IterationReport& report) {
  if (pool_.tokens_of(r.id) >= tokens) return true;
  if (pool_.try_grow(r.id, tokens) == AllocStatus::kOk) return true;
  const std::int64_t extra =
      blocks_needed(tokens, config_.block_size) - pool_.blocks_of(r.id);
  preempt_for_memory(extra, r.id, report);
  if (!r.running()) return false;
  if (pool_.try_grow(r.id, tokens) != AllocStatus::kOk) {
    throw std::logic_error("grow failed after preemption");
  }
  return true;
}

void Engine::finish(Request& r, IterationReport& report) {
  r.state = RequestState::kFinished;
  r.finish_time = clock_;
  pool_.free(r.id);
  running_.erase(std::find(running_.begin(), running_.end(), r.id));
  report.finished.push_back(r.id);
  log(EventKind::kFinish, r.id, r.generated);
}

void Engine::emit_token(Request& r, IterationReport& report) {
  ++r.generated;
  if (!r.first_token_time) {
    r.first_token_time = clock_;
    report.first_tokens.push_back(r.id);
    log(EventKind::kFirstToken, r.id, r.generated);
  }
  if (r.generated == r.output_len) finish(r, report);
}

void Engine::apply_progress(const BatchPlan& plan, IterationReport& report) {
  std::unordered_set<RequestId> decodes(plan.decode_ids.begin(),
                                        plan.decode_ids.end());
  std::unordered_map<RequestId, TokenCount> chunks(plan.prefill_chunks.begin(),
                                                   plan.prefill_chunks.end());
  const std::vector<RequestId> order = running_;
  for (RequestId id : order) {
    Request& r = mutable_request(id);
    if (!r.running()) continue;  // evicted earlier in this step
    if (decodes.contains(id)) {
      if (!ensure_kv(r, r.context_len + 1, report)) continue;
      ++r.context_len;
      emit_token(r, report);
    } else if (auto it = chunks.find(id); it != chunks.end()) {
      r.prefill_done += it->second;
      r.context_len = r.prefill_done;
      if (r.pending_prefill() == 0) {
        r.state = RequestState::kDecoding;
        emit_token(r, report);
      }
    }
  }
}

void Engine::check_invariants() const {
  if (!pool_.conserves()) {
    throw std::logic_error("KV pool conservation violated");
  }
  if (pool_.num_allocations() != running_.size()) {
    throw std::logic_error("pool allocations do not match the running set");
  }
  for (RequestId id : running_) {
    const Request& r = requests_.at(id);
    if (!pool_.contains(id) || pool_.tokens_of(id) < r.context_len) {
      throw std::logic_error(
          fmt::format("request {} holds less KV than its context", id));
    }
  }
}

IterationReport Engine::step() {
  admit_arrivals();
  if (waiting_.empty() && running_.empty()) {
    throw std::logic_error("step: engine has no work");
  }
  IterationReport report;
  report.start_time = clock_;
  apply_policy(report);

  report.plan = form_batch();
  if (report.plan.total_tokens == 0) {
    throw std::runtime_error(fmt::format(
        "scheduler stalled at t={} with {} waiting requests", clock_,
        waiting_.size()));
  }

  TokenCount resident = 0;
  for (RequestId id : report.plan.decode_ids) resident += requests_.at(id).context_len;
  for (const auto& [id, chunk] : report.plan.prefill_chunks) {
    resident += requests_.at(id).context_len;
  }
  report.latency_s =
      iteration_latency(config_.cost, report.plan.total_tokens, resident);
  clock_ += report.latency_s;

  apply_progress(report.plan, report);
  check_invariants();

  ++stats_.iterations;
  stats_.max_batch_tokens = std::max(stats_.max_batch_tokens, report.plan.total_tokens);
  stats_.total_batch_tokens += report.plan.total_tokens;
  stats_.busy_time += report.latency_s;
  return report;
}

std::vector<MetricsRecord> Engine::run(std::span<const TraceEntry> trace) {
  if (!requests_.empty()) {
    throw std::logic_error("run: engine already holds requests");
  }
  std::vector<Request> pending;
  pending.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    pending.push_back(Request::make(i, trace[i].arrival_time, trace[i].prompt_len,
                                    trace[i].output_len));
    check_feasible(pending.back());
  }
  for (Request& r : pending) submit(std::move(r));
  while (has_work()) step();
  return records();
}

std::vector<MetricsRecord> Engine::records() const {
  std::vector<MetricsRecord> out;
  for (const auto& [id, r] : requests_) {
    if (r.state != RequestState::kFinished) continue;
    MetricsRecord rec;
    rec.id = id;
    rec.arrival_time = r.arrival_time;
    rec.first_token_time = *r.first_token_time;
    rec.finish_time = *r.finish_time;
    rec.prompt_len = r.prompt_len;
    rec.output_len = r.output_len;
    rec.preempt_count = r.preempt_count;
    rec.server = server_index_;
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) { return a.id < b.id; });
  return out;
}

}  // namespace llmsched
