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
#include <string>
#include <string_view>
#include <unordered_map>

#include "llmsched/types.h"

namespace llmsched {

inline constexpr TokenCount kDefaultBlockSize = 16;

// ceil(tokens / block_size)
std::int64_t blocks_needed(TokenCount tokens, TokenCount block_size);

enum class AllocStatus { kOk, kInsufficient };

// Block-granular KV-cache accounting for one server. Allocations are keyed by
// request and grow on demand; a failed call never changes the pool.
//
// Invariant: free_blocks() + sum of allocated blocks == total_blocks().
class KvBlockPool {
 public:
  explicit KvBlockPool(std::int64_t total_blocks,
                       TokenCount block_size = kDefaultBlockSize);

  // Throws std::logic_error if `id` already holds an allocation.
  AllocStatus try_allocate(RequestId id, TokenCount tokens);

  // Resizes the allocation of `id` to cover `new_total_tokens`. Throws
  // std::logic_error for unknown ids or when new_total_tokens is below the
  // currently covered token count.
  AllocStatus try_grow(RequestId id, TokenCount new_total_tokens);

  // Releases the allocation of `id` and returns its block count. Throws
  // std::logic_error for unknown ids.
  std::int64_t free(RequestId id);

  bool can_allocate(TokenCount tokens) const;
  bool contains(RequestId id) const;
  std::int64_t blocks_of(RequestId id) const;
  TokenCount tokens_of(RequestId id) const;

  std::int64_t total_blocks() const { return total_blocks_; }
  std::int64_t free_blocks() const { return total_blocks_ - used_blocks_; }
  std::int64_t used_blocks() const { return used_blocks_; }
  TokenCount block_size() const { return block_size_; }
  TokenCount free_tokens() const { return free_blocks() * block_size_; }
  TokenCount capacity_tokens() const { return total_blocks_ * block_size_; }
  std::size_t num_allocations() const { return allocations_.size(); }

  // Recounts every allocation and checks the conservation invariant.
  bool conserves() const;

 private:
  struct Allocation {
    std::int64_t blocks = 0;
    TokenCount tokens = 0;
  };

  const Allocation& lookup(RequestId id, std::string_view op) const;

  std::int64_t total_blocks_;
  TokenCount block_size_;
  std::int64_t used_blocks_ = 0;
  std::unordered_map<RequestId, Allocation> allocations_;
};

// Memory footprint of one model replica.
struct ModelProfile {
  std::string name;
  double kv_bytes_per_token = 0.0;
  TokenCount max_context = 0;
  double weights_bytes = 0.0;
  // Forward-pass FLOPs per token, about 2x the parameter count.
  double flops_per_token = 0.0;
};

void validate(const ModelProfile& profile);

// Known profiles: "llama3-8b" (bf16) and "llama3-70b" (fp8 weights, bf16 KV).
const ModelProfile& model_profile(std::string_view name);

double kv_bytes(TokenCount tokens, const ModelProfile& profile);

// Blocks left for KV caches once the weights are resident:
// floor((usable_memory_bytes - weights) / (kv_bytes_per_token * block_size)).
std::int64_t pool_blocks_for(const ModelProfile& profile,
                             double usable_memory_bytes,
                             TokenCount block_size = kDefaultBlockSize);

}  // namespace llmsched
