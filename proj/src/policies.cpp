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

#include "llmsched/policies.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace llmsched {
namespace {

// Tracks the resources a decision has already claimed within one instant.
class Admitter {
 public:
  explicit Admitter(const SchedulingContext& ctx)
      : free_blocks_(ctx.pool->free_blocks()),
        block_size_(ctx.pool->block_size()),
        budget_(ctx.token_budget_left) {
    if (ctx.max_running) {
      limited_ = true;
      slots_ = *ctx.max_running > ctx.running.size()
                   ? *ctx.max_running - ctx.running.size()
                   : 0;
    }
  }

  bool open() const { return budget_ > 0 && (!limited_ || slots_ > 0); }

  bool fits(TokenCount reserve_tokens) const {
    return blocks_needed(reserve_tokens, block_size_) <= free_blocks_;
  }

  std::int64_t shortfall(TokenCount reserve_tokens) const {
    return blocks_needed(reserve_tokens, block_size_) - free_blocks_;
  }

  void admit(const Request& r, TokenCount reserve_tokens, PolicyDecision& out) {
    free_blocks_ -= blocks_needed(reserve_tokens, block_size_);
    budget_ -= std::min(r.pending_prefill(), budget_);
    if (limited_) --slots_;
    out.dispatch.push_back({r.id, reserve_tokens});
  }

  void release(std::int64_t blocks) {
    free_blocks_ += blocks;
    if (limited_) ++slots_;
  }

 private:
  std::int64_t free_blocks_;
  TokenCount block_size_;
  TokenCount budget_;
  bool limited_ = false;
  std::size_t slots_ = 0;
};

bool earlier(const Request* a, const Request* b) {
  if (a->arrival_time != b->arrival_time) return a->arrival_time < b->arrival_time;
  return a->id < b->id;
}

}  // namespace

std::vector<RequestId> PolicyDecision::dispatch_ids() const {
  std::vector<RequestId> ids;
  ids.reserve(dispatch.size());
  for (const Admission& a : dispatch) ids.push_back(a.id);
  return ids;
}

bool is_valid_decision(const PolicyDecision& decision,
                       const SchedulingContext& ctx) {
  std::unordered_set<RequestId> waiting;
  std::unordered_set<RequestId> running;
  for (const Request* r : ctx.waiting) waiting.insert(r->id);
  for (const Request* r : ctx.running) running.insert(r->id);

  std::unordered_set<RequestId> seen;
  for (const Admission& a : decision.dispatch) {
    if (!waiting.contains(a.id) || !seen.insert(a.id).second) return false;
  }
  for (RequestId id : decision.preempt) {
    if (!running.contains(id) || !seen.insert(id).second) return false;
  }
  return true;
}

PolicyDecision fcfs_select(const SchedulingContext& ctx) {
  PolicyDecision out;
  Admitter admit(ctx);
  for (const Request* r : ctx.waiting) {
    if (!admit.open() || !admit.fits(r->pending_prefill())) break;
    admit.admit(*r, r->pending_prefill(), out);
  }
  return out;
}

TokenCount nopreempt_reservation(const Request& r, const NoPreemptParams& params) {
  const TokenCount worst =
      std::min(params.max_context, r.prompt_len + params.max_output);
  return std::max(worst, r.pending_prefill());
}

PolicyDecision nopreempt_select(const SchedulingContext& ctx,
                                const NoPreemptParams& params) {
  PolicyDecision out;
  Admitter admit(ctx);
  for (const Request* r : ctx.waiting) {
    const TokenCount reserve = nopreempt_reservation(*r, params);
    if (!admit.open() || !admit.fits(reserve)) break;
    admit.admit(*r, reserve, out);
  }
  return out;
}

bool trail_preemptible(const Request& q, const Request& r, double c) {
  const double progress =
      static_cast<double>(q.generated) / static_cast<double>(q.output_len);
  return r.remaining_output() < q.remaining_output() && progress < c;
}

PolicyDecision trail_plus_select(const SchedulingContext& ctx,
                                 const TrailParams& params) {
  std::vector<const Request*> order(ctx.waiting.begin(), ctx.waiting.end());
  std::sort(order.begin(), order.end(), [](const Request* a, const Request* b) {
    if (a->remaining_output() != b->remaining_output()) {
      return a->remaining_output() < b->remaining_output();
    }
    return earlier(a, b);
  });

  PolicyDecision out;
  Admitter admit(ctx);
  std::vector<bool> marked(ctx.running.size(), false);
  for (const Request* r : order) {
    if (!admit.open()) break;
    const TokenCount need = r->pending_prefill();
    if (admit.fits(need)) {
      admit.admit(*r, need, out);
      continue;
    }
    if (params.c <= 0.0) continue;

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ctx.running.size(); ++i) {
      if (!marked[i] && trail_preemptible(*ctx.running[i], *r, params.c)) {
        candidates.push_back(i);
      }
    }
    // Evict the requests with the most work left first; among equals, the
    // most recently dispatched.
    std::sort(candidates.begin(), candidates.end(),
              [&ctx](std::size_t a, std::size_t b) {
                const Request* qa = ctx.running[a];
                const Request* qb = ctx.running[b];
                if (qa->remaining_output() != qb->remaining_output()) {
                  return qa->remaining_output() > qb->remaining_output();
                }
                return qa->dispatch_seq > qb->dispatch_seq;
              });
    std::int64_t missing = admit.shortfall(need);
    std::size_t take = 0;
    while (take < candidates.size() && missing > 0) {
      missing -= ctx.pool->blocks_of(ctx.running[candidates[take]]->id);
      ++take;
    }
    if (missing > 0) continue;
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t i = candidates[k];
      marked[i] = true;
      admit.release(ctx.pool->blocks_of(ctx.running[i]->id));
      out.preempt.push_back(ctx.running[i]->id);
    }
    admit.admit(*r, need, out);
  }
  return out;
}

double larry_score(const Request& r, Seconds clock, std::size_t queue_len,
                   double alpha) {
  const double wait = clock - r.arrival_time;
  return alpha * wait - static_cast<double>(queue_len) *
                            static_cast<double>(r.pending_prefill());
}

PolicyDecision larry_select(const SchedulingContext& ctx, const LarryParams& params) {
  struct Scored {
    double score;
    const Request* request;
  };
  const std::size_t queue_len = ctx.waiting.size();
  std::vector<Scored> scored;
  scored.reserve(queue_len);
  for (const Request* r : ctx.waiting) {
    scored.push_back({larry_score(*r, ctx.clock, queue_len, params.alpha), r});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return earlier(a.request, b.request);
  });

  PolicyDecision out;
  Admitter admit(ctx);
  for (const Scored& s : scored) {
    const TokenCount need = s.request->pending_prefill();
    if (!admit.open() || !admit.fits(need)) break;
    admit.admit(*s.request, need, out);
  }
  return out;
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kFcfs:
      return "fcfs";
    case PolicyKind::kNoPreempt:
      return "nopreempt";
    case PolicyKind::kTrailPlus:
      return "trail_plus";
    case PolicyKind::kLarry:
      return "larry";
  }
  return "fcfs";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  for (PolicyKind k : {PolicyKind::kFcfs, PolicyKind::kNoPreempt,
                       PolicyKind::kTrailPlus, PolicyKind::kLarry}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void validate(const PolicyConfig& config) {
  if (!std::isfinite(config.larry.alpha) || config.larry.alpha < 0.0) {
    throw std::invalid_argument(
        fmt::format("alpha must be finite and >= 0, got {}", config.larry.alpha));
  }
  if (!(config.trail.c >= 0.0 && config.trail.c <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("c must lie in [0, 1], got {}", config.trail.c));
  }
  if (config.nopreempt.max_context < 1 || config.nopreempt.max_output < 1) {
    throw std::invalid_argument("max_context and max_output must be >= 1");
  }
}

PolicyDecision select(const PolicyConfig& config, const SchedulingContext& ctx) {
  switch (config.kind) {
    case PolicyKind::kFcfs:
      return fcfs_select(ctx);
    case PolicyKind::kNoPreempt:
      return nopreempt_select(ctx, config.nopreempt);
    case PolicyKind::kTrailPlus:
      return trail_plus_select(ctx, config.trail);
    case PolicyKind::kLarry:
      return larry_select(ctx, config.larry);
  }
  return fcfs_select(ctx);
}

}  // namespace llmsched
