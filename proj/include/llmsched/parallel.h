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
#include <functional>
#include <span>
#include <vector>

#include "llmsched/cluster.h"
#include "llmsched/workload.h"

namespace llmsched {

// One independent simulation: a cluster config and the trace it replays.
struct Experiment {
  ClusterConfig config;
  Trace trace;
};

// Runs body(i) for i in [0, n) on an OpenMP team. Iterations must not share
// mutable state. The first exception thrown (lowest index) is rethrown after
// all iterations finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Plain loop with the same contract; the reference for parallel_for.
void serial_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Results are in input order and independent of the thread count.
std::vector<ClusterResult> run_experiments(std::span<const Experiment> experiments);
std::vector<ClusterResult> run_experiments_serial(
    std::span<const Experiment> experiments);

int max_threads();

}  // namespace llmsched
