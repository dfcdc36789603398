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

// Straight-line reference simulator used as a test oracle. It shares no code
// with the library: one function, flat arrays indexed by request id, no event
// queue. It follows the same serving rules as the engine so both must emit
// the same event sequence bit for bit.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace refsim {

enum class Policy { kFcfs, kNoPreempt, kTrailPlus, kLarry };

struct Config {
  Policy policy = Policy::kFcfs;
  double alpha = 1.0;  // larry
  double c = 0.0;      // trail_plus
  std::int64_t np_max_context = 8192;
  std::int64_t np_max_output = 2048;
  std::int64_t cap = 1024;
  std::int64_t total_blocks = 1000;
  std::int64_t block_size = 16;
  double mem_base = 0.01;
  double mem_per_kv = 1e-7;
  double compute_per_token = 5e-5;
  double overhead = 1e-3;
};

struct Job {
  double arrival = 0.0;
  std::int64_t prompt = 1;
  std::int64_t output = 1;
};

struct Event {
  std::string kind;  // dispatch, preempt, first_token, finish, capacity_warning
  double time = 0.0;
  std::uint64_t id = 0;
  std::int64_t detail = 0;

  bool operator==(const Event&) const = default;
};

struct Outcome {
  std::vector<Event> events;
  std::vector<double> first_token;
  std::vector<double> finish;
  std::vector<int> preempts;
  std::int64_t max_batch = 0;
};

// Jobs must be sorted by arrival. Throws std::runtime_error on a stall.
Outcome simulate(const Config& cfg, const std::vector<Job>& jobs);

}  // namespace refsim
