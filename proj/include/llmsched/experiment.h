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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "llmsched/balancers.h"
#include "llmsched/cluster.h"
#include "llmsched/costmodel.h"
#include "llmsched/metrics.h"
#include "llmsched/policies.h"
#include "llmsched/workload.h"

namespace llmsched {

// Bad or inconsistent configuration. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WorkloadKind { kSynth, kTrace, kArrivalsSizes };

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kSynth;
  SynthSpec synth;
  std::filesystem::path trace;     // combined CSV
  std::filesystem::path arrivals;  // arrival_s CSV
  std::filesystem::path sizes;     // prompt_tokens,output_tokens CSV
  double qps_scale = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  WorkloadConfig workload;

  std::string model = "llama3-8b";
  std::string hardware = "a100-40gb";
  // Fraction of server memory given to weights plus KV cache.
  double memory_utilization = 0.9;
  std::optional<std::int64_t> total_blocks;  // overrides the derived pool size
  TokenCount block_size = kDefaultBlockSize;
  TokenCount max_tokens_per_batch = 1024;
  std::optional<std::size_t> max_running;
  CostOverrides cost;

  std::size_t n_servers = 1;
  std::vector<PolicyKind> policies{PolicyKind::kFcfs};
  std::vector<BalancerKind> balancers{BalancerKind::kRoundRobin};
  LarryParams larry;
  TrailParams trail;
  NoPreemptParams nopreempt;
  BalancerConfig balancer;  // kind is taken from `balancers`

  std::vector<double> sweep_factors;
  std::filesystem::path out_dir = "out";
  bool write_events = false;
};

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON and
// falls back to a plain string. Throws ConfigError on malformed input.
void apply_set(nlohmann::json& doc, const std::string& assignment);

// Unknown keys are rejected. Relative paths resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir);

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::span<const std::string> overrides = {});

nlohmann::json config_to_json(const ExperimentConfig& config);

// Pool size, cost parameters and engine limits for one server.
EngineConfig engine_config(const ExperimentConfig& config);

ClusterConfig cluster_config(const ExperimentConfig& config, PolicyKind policy,
                             BalancerKind balancer);

Trace build_trace(const ExperimentConfig& config);

struct Combination {
  PolicyKind policy = PolicyKind::kFcfs;
  BalancerKind balancer = BalancerKind::kRoundRobin;
};

// Policies outer, balancers inner, in config order.
std::vector<Combination> combinations(const ExperimentConfig& config);

struct RunResult {
  Combination combination;
  ClusterResult result;
  Summary summary;
};

std::vector<RunResult> run_all(const ExperimentConfig& config, const Trace& trace);

struct SweepRow {
  Combination combination;
  SweepPoint point;
};

// One row per (combination, factor), combinations outer.
std::vector<SweepRow> sweep_all(const ExperimentConfig& config, const Trace& trace);

}  // namespace llmsched
