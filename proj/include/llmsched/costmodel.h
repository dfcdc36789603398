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

#include <optional>
#include <string>
#include <string_view>

#include "llmsched/kvmem.h"
#include "llmsched/types.h"

namespace llmsched {

// Roofline cost of one forward pass:
//
//   latency = overhead + max(mem_base + mem_per_kv_token * resident_kv,
//                            compute_per_token * batch_tokens)
//
// The memory term is the weight load plus the KV reads; the compute term is
// linear in the tokens propagated. Decode-heavy batches sit on the memory
// side, large prefill chunks on the compute side.
struct CostParams {
  Seconds mem_base_s = 0.0;
  Seconds mem_per_kv_token_s = 0.0;
  Seconds compute_per_token_s = 0.0;
  Seconds overhead_s = 0.0;

  bool operator==(const CostParams&) const = default;
};

void validate(const CostParams& params);

Seconds iteration_latency(const CostParams& params, TokenCount batch_tokens,
                          TokenCount resident_kv_tokens);

struct HardwareProfile {
  std::string name;
  double memory_bytes = 0.0;      // per GPU
  double memory_bandwidth = 0.0;  // bytes/s per GPU
  double peak_flops = 0.0;        // dense bf16 FLOP/s per GPU
  int num_gpus = 1;               // tensor-parallel degree of one server
};

// Known labels: "a100-40gb", "h100-80gb", "2xh100-80gb".
const HardwareProfile& hardware_profile(std::string_view name);

// Nominal roofline parameters for a model on a server: weights streamed at
// full bandwidth, KV reads at full bandwidth, compute at peak FLOP/s, and a
// 1 ms fixed scheduling overhead. Throws std::invalid_argument for unknown
// hardware labels.
CostParams default_params(const ModelProfile& profile, std::string_view hardware);

struct CostOverrides {
  std::optional<Seconds> mem_base_s;
  std::optional<Seconds> mem_per_kv_token_s;
  std::optional<Seconds> compute_per_token_s;
  std::optional<Seconds> overhead_s;

  bool complete() const;
  bool empty() const;
};

CostParams apply_overrides(CostParams base, const CostOverrides& overrides);

// Batch tokens at which the compute term overtakes the memory term.
double roofline_crossover(const CostParams& params, TokenCount resident_kv_tokens);

// Decode tokens per second for `batch` requests of `avg_context` tokens each.
double decode_throughput(const CostParams& params, TokenCount batch,
                         TokenCount avg_context);

// Tokens per second when every iteration is filled to `max_tokens_per_batch`
// with no resident KV: an upper bound on sustained token throughput.
double token_capacity(const CostParams& params, TokenCount max_tokens_per_batch);

}  // namespace llmsched
