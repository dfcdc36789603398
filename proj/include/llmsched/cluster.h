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
#include <span>
#include <vector>

#include "llmsched/balancers.h"
#include "llmsched/engine.h"
#include "llmsched/policies.h"
#include "llmsched/record.h"
#include "llmsched/workload.h"

namespace llmsched {

struct ClusterConfig {
  std::size_t n_servers = 1;
  EngineConfig engine;
  // Optional per-server override; when non-empty it must hold n_servers entries.
  std::vector<EngineConfig> server_engines;
  PolicyConfig policy;
  BalancerConfig balancer;
  std::uint64_t seed = 1;
};

void validate(const ClusterConfig& config);

struct ServerSummary {
  std::uint64_t routed_requests = 0;
  TokenCount routed_tokens = 0;  // prompt + output of every routed request
  EngineStats engine;
};

struct ClusterResult {
  std::vector<MetricsRecord> records;  // ordered by id
  std::vector<ServerSummary> servers;
  std::vector<std::size_t> routes;  // server chosen for each trace entry
  std::vector<EngineEvent> events;  // all servers, in processing order
};

// Ground truth the balancer polls: prefill tokens not yet processed (waiting,
// not-yet-visible and partially prefilled requests), free KV tokens, and
// unfinished requests.
ServerStats snapshot_stats(const Engine& engine);

// Global event loop over one balancer and n engines. Arrivals are routed
// at their arrival time, before any engine step starting at the same time;
// engine steps are processed in (start time, server index) order. Request
// ids are trace indices. Throws std::invalid_argument for requests that do
// not fit a server.
ClusterResult run_cluster(const ClusterConfig& config, std::span<const TraceEntry> trace);

// Largest minus smallest routed_tokens across servers.
TokenCount routed_token_imbalance(const ClusterResult& result);

}  // namespace llmsched
