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
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "llmsched/types.h"

namespace llmsched {

// What the balancer knows about one server. Token quantities are in tokens,
// memory as free KV blocks times the block size.
struct ServerStats {
  TokenCount queued_tokens = 0;
  TokenCount free_mem_tokens = 0;
  std::int64_t in_flight = 0;

  bool operator==(const ServerStats&) const = default;
};

// Possibly stale per-server estimates, refreshed by poll().
struct BalancerView {
  std::vector<ServerStats> servers;
  Seconds last_poll_time = 0.0;
};

class BetaEstimator {
 public:
  explicit BetaEstimator(double prior = 1365.0 / 211.0);

  void update(TokenCount prompt_len, TokenCount output_len);

  // (mean_in + mean_out) / mean_out, or the prior before any sample.
  double beta() const;
  double mean_in() const;
  double mean_out() const;
  std::uint64_t count() const { return count_; }
  double prior() const { return prior_; }

 private:
  double prior_;
  double sum_in_ = 0.0;
  double sum_out_ = 0.0;
  std::uint64_t count_ = 0;
};

struct RoundRobinState {
  std::uint64_t next = 0;
};

std::size_t rr_route(RoundRobinState& state, std::size_t n_servers);
std::size_t random_route(std::mt19937_64& rng, std::size_t n_servers);

// Samples two distinct servers and keeps the one with fewer in-flight
// requests; ties go to the first one sampled.
std::size_t p2c_route(std::mt19937_64& rng, const BalancerView& view);

// max(beta * (memory - free_mem), (queued_tokens + prompt_len) / cap), where
// memory is the request's prompt length in tokens.
double sal_load(const ServerStats& server, TokenCount prompt_len, double beta,
                TokenCount max_tokens_per_batch);

// Lowest sal_load; ties go to fewer in_flight, then the lowest index. Does
// not touch the view.
std::size_t sal_choose(const BalancerView& view, TokenCount prompt_len, double beta,
                       TokenCount max_tokens_per_batch);

// sal_choose followed by apply_route on the chosen server.
std::size_t sal_route(BalancerView& view, TokenCount prompt_len, double beta,
                      TokenCount max_tokens_per_batch);

// Optimistic in-between-poll estimate after routing a request: queued tokens
// and in-flight grow, free memory shrinks by the prompt (clamped at 0).
void apply_route(ServerStats& server, TokenCount prompt_len);

// Overwrites the view with `truth` once clock - last_poll_time >= interval.
// Returns true when the view was refreshed.
bool poll(BalancerView& view, std::span<const ServerStats> truth, Seconds clock,
          Seconds interval = 0.1);

enum class BalancerKind { kRoundRobin, kRandom, kP2c, kSal };

std::string_view to_string(BalancerKind kind);
std::optional<BalancerKind> parse_balancer_kind(std::string_view name);

struct BalancerConfig {
  BalancerKind kind = BalancerKind::kRoundRobin;
  Seconds poll_interval_s = 0.1;  // infinity disables polling
  double beta_prior = 1365.0 / 211.0;
  std::optional<double> beta_fixed;
};

void validate(const BalancerConfig& config);

// Stateful front end used by the cluster loop.
class LoadBalancer {
 public:
  LoadBalancer(BalancerConfig config, std::vector<ServerStats> initial,
               TokenCount max_tokens_per_batch, std::uint64_t seed);

  // Polls if due, picks a server and applies the routing estimate.
  std::size_t route(TokenCount prompt_len, Seconds clock,
                    std::span<const ServerStats> truth);

  void on_finish(std::size_t server, TokenCount prompt_len, TokenCount output_len);

  double beta() const;
  const BalancerView& view() const { return view_; }
  const BetaEstimator& estimator() const { return estimator_; }
  const BalancerConfig& config() const { return config_; }

 private:
  BalancerConfig config_;
  BalancerView view_;
  TokenCount max_tokens_per_batch_;
  BetaEstimator estimator_;
  RoundRobinState rr_;
  std::mt19937_64 rng_;
};

}  // namespace llmsched
