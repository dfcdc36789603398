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

#include "llmsched/balancers.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace llmsched {

BetaEstimator::BetaEstimator(double prior) : prior_(prior) {
  if (!std::isfinite(prior) || prior <= 0.0) {
    throw std::invalid_argument(fmt::format("beta prior must be > 0, got {}", prior));
  }
}

void BetaEstimator::update(TokenCount prompt_len, TokenCount output_len) {
  if (prompt_len < 1 || output_len < 1) {
    throw std::invalid_argument("beta update needs lengths >= 1");
  }
  sum_in_ += static_cast<double>(prompt_len);
  sum_out_ += static_cast<double>(output_len);
  ++count_;
}

double BetaEstimator::mean_in() const {
  return count_ == 0 ? 0.0 : sum_in_ / static_cast<double>(count_);
}

double BetaEstimator::mean_out() const {
  return count_ == 0 ? 0.0 : sum_out_ / static_cast<double>(count_);
}

double BetaEstimator::beta() const {
  if (count_ == 0) return prior_;
  return (sum_in_ + sum_out_) / sum_out_;
}

std::size_t rr_route(RoundRobinState& state, std::size_t n_servers) {
  if (n_servers == 0) throw std::invalid_argument("rr_route: no servers");
  return static_cast<std::size_t>(state.next++ % n_servers);
}

std::size_t random_route(std::mt19937_64& rng, std::size_t n_servers) {
  if (n_servers == 0) throw std::invalid_argument("random_route: no servers");
  std::uniform_int_distribution<std::size_t> pick(0, n_servers - 1);
  return pick(rng);
}

std::size_t p2c_route(std::mt19937_64& rng, const BalancerView& view) {
  const std::size_t n = view.servers.size();
  if (n == 0) throw std::invalid_argument("p2c_route: no servers");
  if (n == 1) return 0;
  std::size_t a = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::size_t b = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  if (b >= a) ++b;
  return view.servers[b].in_flight < view.servers[a].in_flight ? b : a;
}

double sal_load(const ServerStats& server, TokenCount prompt_len, double beta,
                TokenCount max_tokens_per_batch) {
  if (max_tokens_per_batch < 1) {
    throw std::invalid_argument("sal_load: max_tokens_per_batch must be >= 1");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("sal_load: beta must be > 0");
  const double memory_term =
      beta * static_cast<double>(prompt_len - server.free_mem_tokens);
  const double token_term = static_cast<double>(server.queued_tokens + prompt_len) /
                            static_cast<double>(max_tokens_per_batch);
  return std::max(memory_term, token_term);
}

std::size_t sal_choose(const BalancerView& view, TokenCount prompt_len, double beta,
                       TokenCount max_tokens_per_batch) {
  if (view.servers.empty()) throw std::invalid_argument("sal_route: no servers");
  std::size_t best = 0;
  double best_load = sal_load(view.servers[0], prompt_len, beta, max_tokens_per_batch);
  for (std::size_t s = 1; s < view.servers.size(); ++s) {
    const double load = sal_load(view.servers[s], prompt_len, beta, max_tokens_per_batch);
    // Equal loads are common when every queue is empty, so fewer in-flight
    // requests decides before the index does.
    const bool tie = load == best_load &&
                     view.servers[s].in_flight < view.servers[best].in_flight;
    if (load < best_load || tie) {
      best = s;
      best_load = load;
    }
  }
  return best;
}

std::size_t sal_route(BalancerView& view, TokenCount prompt_len, double beta,
                      TokenCount max_tokens_per_batch) {
  const std::size_t s = sal_choose(view, prompt_len, beta, max_tokens_per_batch);
  apply_route(view.servers[s], prompt_len);
  return s;
}

void apply_route(ServerStats& server, TokenCount prompt_len) {
  server.queued_tokens += prompt_len;
  server.free_mem_tokens = std::max<TokenCount>(0, server.free_mem_tokens - prompt_len);
  server.in_flight += 1;
}

bool poll(BalancerView& view, std::span<const ServerStats> truth, Seconds clock,
          Seconds interval) {
  if (clock < view.last_poll_time) {
    throw std::invalid_argument("poll: clock moved backwards");
  }
  if (truth.size() != view.servers.size()) {
    throw std::invalid_argument("poll: server count mismatch");
  }
  if (!(clock - view.last_poll_time >= interval)) return false;
  view.servers.assign(truth.begin(), truth.end());
  view.last_poll_time = clock;
  return true;
}

std::string_view to_string(BalancerKind kind) {
  switch (kind) {
    case BalancerKind::kRoundRobin:
      return "rr";
    case BalancerKind::kRandom:
      return "random";
    case BalancerKind::kP2c:
      return "p2c";
    case BalancerKind::kSal:
      return "sal";
  }
  return "rr";
}

std::optional<BalancerKind> parse_balancer_kind(std::string_view name) {
  for (BalancerKind k : {BalancerKind::kRoundRobin, BalancerKind::kRandom,
                         BalancerKind::kP2c, BalancerKind::kSal}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void validate(const BalancerConfig& config) {
  if (std::isnan(config.poll_interval_s) || config.poll_interval_s < 0.0) {
    throw std::invalid_argument(fmt::format(
        "poll_interval_s must be >= 0, got {}", config.poll_interval_s));
  }
  if (!std::isfinite(config.beta_prior) || config.beta_prior <= 0.0) {
    throw std::invalid_argument(
        fmt::format("beta_prior must be > 0, got {}", config.beta_prior));
  }
  if (config.beta_fixed &&
      (!std::isfinite(*config.beta_fixed) || *config.beta_fixed <= 0.0)) {
    throw std::invalid_argument(
        fmt::format("beta_fixed must be > 0, got {}", *config.beta_fixed));
  }
}

LoadBalancer::LoadBalancer(BalancerConfig config, std::vector<ServerStats> initial,
                           TokenCount max_tokens_per_batch, std::uint64_t seed)
    : config_((validate(config), config)),
      max_tokens_per_batch_(max_tokens_per_batch),
      estimator_(config_.beta_prior),
      rng_(seed) {
  if (initial.empty()) throw std::invalid_argument("balancer needs >= 1 server");
  if (max_tokens_per_batch < 1) {
    throw std::invalid_argument("max_tokens_per_batch must be >= 1");
  }
  view_.servers = std::move(initial);
}

double LoadBalancer::beta() const {
  return config_.beta_fixed ? *config_.beta_fixed : estimator_.beta();
}

std::size_t LoadBalancer::route(TokenCount prompt_len, Seconds clock,
                                std::span<const ServerStats> truth) {
  poll(view_, truth, clock, config_.poll_interval_s);
  const std::size_t n = view_.servers.size();
  std::size_t s = 0;
  switch (config_.kind) {
    case BalancerKind::kRoundRobin:
      s = rr_route(rr_, n);
      break;
    case BalancerKind::kRandom:
      s = random_route(rng_, n);
      break;
    case BalancerKind::kP2c:
      s = p2c_route(rng_, view_);
      break;
    case BalancerKind::kSal:
      s = sal_choose(view_, prompt_len, beta(), max_tokens_per_batch_);
      break;
  }
  apply_route(view_.servers[s], prompt_len);
  return s;
}

void LoadBalancer::on_finish(std::size_t server, TokenCount prompt_len,
                             TokenCount output_len) {
  ServerStats& st = view_.servers.at(server);
  st.in_flight = std::max<std::int64_t>(0, st.in_flight - 1);
  estimator_.update(prompt_len, output_len);
}

}  // namespace llmsched
