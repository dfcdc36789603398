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

#include "llmsched/costmodel.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace llmsched {

void validate(const CostParams& p) {
  const auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!finite_nonneg(p.mem_per_kv_token_s) || !finite_nonneg(p.compute_per_token_s) ||
      !finite_nonneg(p.overhead_s) || !std::isfinite(p.mem_base_s) ||
      !(p.mem_base_s > 0.0)) {
    throw std::invalid_argument(fmt::format(
        "invalid cost params: mem_base_s={} mem_per_kv_token_s={} "
        "compute_per_token_s={} overhead_s={} (all >= 0, mem_base_s > 0)",
        p.mem_base_s, p.mem_per_kv_token_s, p.compute_per_token_s, p.overhead_s));
  }
}

Seconds iteration_latency(const CostParams& p, TokenCount batch_tokens,
                          TokenCount resident_kv_tokens) {
  const double memory =
      p.mem_base_s + p.mem_per_kv_token_s * static_cast<double>(resident_kv_tokens);
  const double compute = p.compute_per_token_s * static_cast<double>(batch_tokens);
  return p.overhead_s + std::max(memory, compute);
}

namespace {

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

const std::array<HardwareProfile, 3>& known_hardware() {
  static const std::array<HardwareProfile, 3> hw = {
      HardwareProfile{"a100-40gb", 40.0 * kGiB, 1.555e12, 312e12, 1},
      HardwareProfile{"h100-80gb", 80.0 * kGiB, 3.35e12, 989e12, 1},
      HardwareProfile{"2xh100-80gb", 80.0 * kGiB, 3.35e12, 989e12, 2},
  };
  return hw;
}

}  // namespace

const HardwareProfile& hardware_profile(std::string_view name) {
  for (const HardwareProfile& h : known_hardware()) {
    if (h.name == name) return h;
  }
  throw std::invalid_argument(fmt::format("unknown hardware profile '{}'", name));
}

CostParams default_params(const ModelProfile& profile, std::string_view hardware) {
  validate(profile);
  const HardwareProfile& hw = hardware_profile(hardware);
  const double bandwidth = hw.memory_bandwidth * hw.num_gpus;
  const double flops = hw.peak_flops * hw.num_gpus;
  CostParams p;
  p.mem_base_s = profile.weights_bytes / bandwidth;
  p.mem_per_kv_token_s = profile.kv_bytes_per_token / bandwidth;
  p.compute_per_token_s = profile.flops_per_token / flops;
  p.overhead_s = 1e-3;
  return p;
}

bool CostOverrides::complete() const {
  return mem_base_s && mem_per_kv_token_s && compute_per_token_s && overhead_s;
}

bool CostOverrides::empty() const {
  return !mem_base_s && !mem_per_kv_token_s && !compute_per_token_s && !overhead_s;
}

CostParams apply_overrides(CostParams base, const CostOverrides& o) {
  if (o.mem_base_s) base.mem_base_s = *o.mem_base_s;
  if (o.mem_per_kv_token_s) base.mem_per_kv_token_s = *o.mem_per_kv_token_s;
  if (o.compute_per_token_s) base.compute_per_token_s = *o.compute_per_token_s;
  if (o.overhead_s) base.overhead_s = *o.overhead_s;
  validate(base);
  return base;
}

double roofline_crossover(const CostParams& p, TokenCount resident_kv_tokens) {
  const double memory =
      p.mem_base_s + p.mem_per_kv_token_s * static_cast<double>(resident_kv_tokens);
  if (p.compute_per_token_s <= 0.0) return INFINITY;
  return memory / p.compute_per_token_s;
}

double decode_throughput(const CostParams& p, TokenCount batch,
                         TokenCount avg_context) {
  if (batch <= 0) return 0.0;
  return static_cast<double>(batch) /
         iteration_latency(p, batch, batch * avg_context);
}

double token_capacity(const CostParams& p, TokenCount max_tokens_per_batch) {
  return static_cast<double>(max_tokens_per_batch) /
         iteration_latency(p, max_tokens_per_batch, 0);
}

}  // namespace llmsched
