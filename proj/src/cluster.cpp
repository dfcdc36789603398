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

#include "llmsched/cluster.h"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace llmsched {

void validate(const ClusterConfig& config) {
  if (config.n_servers < 1) throw std::invalid_argument("n_servers must be >= 1");
  if (!config.server_engines.empty() &&
      config.server_engines.size() != config.n_servers) {
    throw std::invalid_argument(fmt::format(
        "server_engines holds {} entries for {} servers",
        config.server_engines.size(), config.n_servers));
  }
  validate(config.engine);
  for (const EngineConfig& e : config.server_engines) validate(e);
  validate(config.policy);
  validate(config.balancer);
}

ServerStats snapshot_stats(const Engine& engine) {
  ServerStats s;
  for (const Request* r : engine.waiting()) s.queued_tokens += r->pending_prefill();
  for (const Request* r : engine.inbox()) s.queued_tokens += r->pending_prefill();
  // Unprocessed chunks of admitted prompts delay a new prefill just the same.
  for (const Request* r : engine.running()) s.queued_tokens += r->pending_prefill();
  s.free_mem_tokens = engine.pool().free_tokens();
  s.in_flight = static_cast<std::int64_t>(engine.waiting().size() +
                                          engine.running().size() +
                                          engine.inbox().size());
  return s;
}

ClusterResult run_cluster(const ClusterConfig& config,
                          std::span<const TraceEntry> trace) {
  validate(config);
  const std::size_t n = config.n_servers;

  std::vector<Engine> engines;
  engines.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const EngineConfig& ec =
        config.server_engines.empty() ? config.engine : config.server_engines[s];
    engines.emplace_back(ec, config.policy);
    engines.back().set_server_index(s);
  }

  std::vector<Request> requests;
  requests.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i > 0 && trace[i].arrival_time < trace[i - 1].arrival_time) {
      throw std::invalid_argument("run_cluster: trace arrivals are not sorted");
    }
    requests.push_back(Request::make(i, trace[i].arrival_time, trace[i].prompt_len,
                                     trace[i].output_len));
    for (const Engine& e : engines) e.check_feasible(requests.back());
  }

  std::vector<ServerStats> truth(n);
  for (std::size_t s = 0; s < n; ++s) truth[s] = snapshot_stats(engines[s]);
  // The balancer's own limit; homogeneous by default.
  LoadBalancer balancer(config.balancer, truth, config.engine.max_tokens_per_batch,
                        config.seed);

  ClusterResult result;
  result.servers.resize(n);
  result.routes.resize(trace.size());

  const bool keep_events = config.engine.record_events;
  std::vector<std::size_t> events_seen(n, 0);
  auto collect_events = [&](std::size_t s) {
    if (!keep_events) return;
    const auto& ev = engines[s].events();
    result.events.insert(result.events.end(), ev.begin() + events_seen[s], ev.end());
    events_seen[s] = ev.size();
  };

  std::size_t next = 0;
  constexpr Seconds kInf = std::numeric_limits<Seconds>::infinity();
  while (true) {
    const Seconds t_arrival = next < requests.size() ? requests[next].arrival_time : kInf;
    std::size_t server = n;
    Seconds t_step = kInf;
    for (std::size_t s = 0; s < n; ++s) {
      const Seconds t = engines[s].next_event_time();
      if (t < t_step) {
        t_step = t;
        server = s;
      }
    }
    if (next == requests.size() && server == n) break;

    if (t_arrival <= t_step) {
      for (std::size_t s = 0; s < n; ++s) truth[s] = snapshot_stats(engines[s]);
      Request& r = requests[next];
      const std::size_t s = balancer.route(r.prompt_len, t_arrival, truth);
      result.routes[next] = s;
      result.servers[s].routed_requests += 1;
      result.servers[s].routed_tokens += r.prompt_len + r.output_len;
      engines[s].submit(std::move(r));
      ++next;
      continue;
    }

    const IterationReport report = engines[server].step();
    collect_events(server);
    for (RequestId id : report.finished) {
      const Request& r = engines[server].request(id);
      balancer.on_finish(server, r.prompt_len, r.output_len);
    }
  }

  for (std::size_t s = 0; s < n; ++s) {
    result.servers[s].engine = engines[s].stats();
    std::vector<MetricsRecord> recs = engines[s].records();
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) { return a.id < b.id; });
  if (result.records.size() != trace.size()) {
    throw std::logic_error("run_cluster: lost requests");
  }
  return result;
}

TokenCount routed_token_imbalance(const ClusterResult& result) {
  if (result.servers.empty()) return 0;
  auto [lo, hi] = std::minmax_element(
      result.servers.begin(), result.servers.end(),
      [](const ServerSummary& a, const ServerSummary& b) {
        return a.routed_tokens < b.routed_tokens;
      });
  return hi->routed_tokens - lo->routed_tokens;
}

}  // namespace llmsched
