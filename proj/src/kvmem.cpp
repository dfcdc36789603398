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

#include "llmsched/kvmem.h"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <stdexcept>

namespace llmsched {

std::int64_t blocks_needed(TokenCount tokens, TokenCount block_size) {
  if (block_size < 1) {
    throw std::invalid_argument(
        fmt::format("block_size must be >= 1, got {}", block_size));
  }
  if (tokens < 0) {
    throw std::invalid_argument(fmt::format("negative token count {}", tokens));
  }
  return (tokens + block_size - 1) / block_size;
}

KvBlockPool::KvBlockPool(std::int64_t total_blocks, TokenCount block_size)
    : total_blocks_(total_blocks), block_size_(block_size) {
  if (total_blocks < 0) {
    throw std::invalid_argument(
        fmt::format("total_blocks must be >= 0, got {}", total_blocks));
  }
  if (block_size < 1) {
    throw std::invalid_argument(
        fmt::format("block_size must be >= 1, got {}", block_size));
  }
}

const KvBlockPool::Allocation& KvBlockPool::lookup(RequestId id,
                                                   std::string_view op) const {
  const auto it = allocations_.find(id);
  if (it == allocations_.end()) {
    throw std::logic_error(
        fmt::format("{}: request {} holds no KV allocation", op, id));
  }
  return it->second;
}

AllocStatus KvBlockPool::try_allocate(RequestId id, TokenCount tokens) {
  if (allocations_.contains(id)) {
    throw std::logic_error(
        fmt::format("try_allocate: request {} is already allocated", id));
  }
  const std::int64_t blocks = blocks_needed(tokens, block_size_);
  if (blocks > free_blocks()) return AllocStatus::kInsufficient;
  allocations_.emplace(id, Allocation{blocks, tokens});
  used_blocks_ += blocks;
  return AllocStatus::kOk;
}

AllocStatus KvBlockPool::try_grow(RequestId id, TokenCount new_total_tokens) {
  const Allocation& current = lookup(id, "try_grow");
  if (new_total_tokens < current.tokens) {
    throw std::logic_error(fmt::format(
        "try_grow: request {} cannot shrink from {} to {} tokens", id,
        current.tokens, new_total_tokens));
  }
  const std::int64_t blocks = blocks_needed(new_total_tokens, block_size_);
  const std::int64_t extra = blocks - current.blocks;
  if (extra > free_blocks()) return AllocStatus::kInsufficient;
  Allocation& a = allocations_.at(id);
  a.blocks = blocks;
  a.tokens = new_total_tokens;
  used_blocks_ += extra;
  return AllocStatus::kOk;
}

std::int64_t KvBlockPool::free(RequestId id) {
  const std::int64_t blocks = lookup(id, "free").blocks;
  allocations_.erase(id);
  used_blocks_ -= blocks;
  return blocks;
}

bool KvBlockPool::can_allocate(TokenCount tokens) const {
  return blocks_needed(tokens, block_size_) <= free_blocks();
}

bool KvBlockPool::contains(RequestId id) const {
  return allocations_.contains(id);
}

std::int64_t KvBlockPool::blocks_of(RequestId id) const {
  return lookup(id, "blocks_of").blocks;
}

TokenCount KvBlockPool::tokens_of(RequestId id) const {
  return lookup(id, "tokens_of").tokens;
}

bool KvBlockPool::conserves() const {
  std::int64_t sum = 0;
  for (const auto& [id, a] : allocations_) {
    if (a.blocks < 0 || a.blocks != blocks_needed(a.tokens, block_size_)) {
      return false;
    }
    sum += a.blocks;
  }
  return sum == used_blocks_ && free_blocks() >= 0 &&
         free_blocks() <= total_blocks_;
}

void validate(const ModelProfile& profile) {
  if (!(profile.kv_bytes_per_token > 0.0) || !(profile.weights_bytes > 0.0) ||
      profile.max_context < 1 || !(profile.flops_per_token > 0.0)) {
    throw std::invalid_argument(
        fmt::format("invalid model profile '{}'", profile.name));
  }
}

namespace {

// 2 (K and V) * layers * kv_heads * head_dim * bytes per element.
constexpr double kv_per_token(int layers, int kv_heads, int head_dim,
                              int elem_bytes) {
  return 2.0 * layers * kv_heads * head_dim * elem_bytes;
}

const std::array<ModelProfile, 2>& known_profiles() {
  static const std::array<ModelProfile, 2> profiles = {
      ModelProfile{"llama3-8b", kv_per_token(32, 8, 128, 2), 8192,
                   8.03e9 * 2.0, 2.0 * 8.03e9},
      ModelProfile{"llama3-70b", kv_per_token(80, 8, 128, 2), 8192,
                   70.6e9 * 1.0, 2.0 * 70.6e9},
  };
  return profiles;
}

}  // namespace

const ModelProfile& model_profile(std::string_view name) {
  for (const ModelProfile& p : known_profiles()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument(fmt::format("unknown model profile '{}'", name));
}

double kv_bytes(TokenCount tokens, const ModelProfile& profile) {
  if (tokens < 0) {
    throw std::invalid_argument(fmt::format("negative token count {}", tokens));
  }
  return static_cast<double>(tokens) * profile.kv_bytes_per_token;
}

std::int64_t pool_blocks_for(const ModelProfile& profile,
                             double usable_memory_bytes,
                             TokenCount block_size) {
  validate(profile);
  if (block_size < 1) {
    throw std::invalid_argument(
        fmt::format("block_size must be >= 1, got {}", block_size));
  }
  const double spare = usable_memory_bytes - profile.weights_bytes;
  if (!(spare > 0.0)) {
    throw std::invalid_argument(fmt::format(
        "model '{}' does not fit: {} bytes usable, {} bytes of weights",
        profile.name, usable_memory_bytes, profile.weights_bytes));
  }
  return static_cast<std::int64_t>(
      std::floor(spare / (profile.kv_bytes_per_token *
                          static_cast<double>(block_size))));
}

}  // namespace llmsched
