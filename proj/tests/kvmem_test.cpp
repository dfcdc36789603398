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

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "llmsched/kvmem.h"

namespace llmsched {
namespace {

TEST(BlocksNeededTest, Examples) {
  EXPECT_EQ(blocks_needed(0, 16), 0);
  EXPECT_EQ(blocks_needed(8192, 16), 512);
  EXPECT_EQ(blocks_needed(17, 16), 2);
  EXPECT_EQ(blocks_needed(16, 16), 1);
  EXPECT_THROW(blocks_needed(1, 0), std::invalid_argument);
  EXPECT_THROW(blocks_needed(-1, 16), std::invalid_argument);
}

TEST(KvBlockPoolTest, AllocateExamples) {
  KvBlockPool full(10, 16);
  EXPECT_EQ(full.try_allocate(1, 160), AllocStatus::kOk);
  EXPECT_EQ(full.free_blocks(), 0);

  KvBlockPool short_pool(9, 16);
  EXPECT_EQ(short_pool.try_allocate(1, 160), AllocStatus::kInsufficient);
  EXPECT_EQ(short_pool.free_blocks(), 9);
  EXPECT_FALSE(short_pool.contains(1));

  KvBlockPool zero(4, 16);
  EXPECT_EQ(zero.try_allocate(1, 0), AllocStatus::kOk);
  EXPECT_EQ(zero.free_blocks(), 4);
  EXPECT_TRUE(zero.conserves());
}

TEST(KvBlockPoolTest, DoubleAllocateIsAnError) {
  KvBlockPool pool(10, 16);
  ASSERT_EQ(pool.try_allocate(1, 16), AllocStatus::kOk);
  EXPECT_THROW(pool.try_allocate(1, 16), std::logic_error);
}

TEST(KvBlockPoolTest, GrowExamples) {
  KvBlockPool a(2, 16);
  ASSERT_EQ(a.try_allocate(1, 17), AllocStatus::kOk);
  EXPECT_EQ(a.try_grow(1, 18), AllocStatus::kOk);
  EXPECT_EQ(a.blocks_of(1), 2);

  KvBlockPool b(1, 16);
  ASSERT_EQ(b.try_allocate(1, 16), AllocStatus::kOk);
  EXPECT_EQ(b.try_grow(1, 17), AllocStatus::kInsufficient);
  EXPECT_EQ(b.tokens_of(1), 16);
  EXPECT_EQ(b.blocks_of(1), 1);

  KvBlockPool c(2, 16);
  ASSERT_EQ(c.try_allocate(1, 16), AllocStatus::kOk);
  EXPECT_EQ(c.try_grow(1, 17), AllocStatus::kOk);
  EXPECT_EQ(c.free_blocks(), 0);

  EXPECT_THROW(c.try_grow(2, 5), std::logic_error);
  EXPECT_THROW(c.try_grow(1, 3), std::logic_error);
}

TEST(KvBlockPoolTest, FreeExamples) {
  KvBlockPool pool(20, 16);
  ASSERT_EQ(pool.try_allocate(1, 160), AllocStatus::kOk);
  EXPECT_EQ(pool.free(1), 10);
  EXPECT_EQ(pool.free_blocks(), 20);
  EXPECT_THROW(pool.free(1), std::logic_error);

  ASSERT_EQ(pool.try_allocate(2, 32), AllocStatus::kOk);
  ASSERT_EQ(pool.try_grow(2, 33), AllocStatus::kOk);
  EXPECT_EQ(pool.free(2), 3);
}

// Random op sequences checked against a plain map model.
TEST(KvBlockPoolTest, RandomSequencesConserve) {
  std::mt19937_64 rng(99);
  for (int seq = 0; seq < 300; ++seq) {
    const std::int64_t total = 1 + rng() % 64;
    const TokenCount bs = 1 + rng() % 32;
    KvBlockPool pool(total, bs);
    std::map<RequestId, TokenCount> model;
    for (int op = 0; op < 200; ++op) {
      const RequestId id = rng() % 8;
      const int kind = static_cast<int>(rng() % 3);
      const std::int64_t before = pool.free_blocks();
      if (kind == 0 && !model.contains(id)) {
        const TokenCount tokens = rng() % (total * bs + 8);
        const AllocStatus s = pool.try_allocate(id, tokens);
        if (s == AllocStatus::kOk) {
          model[id] = tokens;
        } else {
          EXPECT_EQ(pool.free_blocks(), before);
          EXPECT_GT(blocks_needed(tokens, bs), before);
        }
      } else if (kind == 1 && model.contains(id)) {
        const TokenCount to = model[id] + static_cast<TokenCount>(rng() % (2 * bs));
        const std::int64_t held = pool.blocks_of(id);
        if (pool.try_grow(id, to) == AllocStatus::kOk) {
          model[id] = to;
          EXPECT_GE(pool.blocks_of(id), held);
        } else {
          EXPECT_EQ(pool.free_blocks(), before);
          EXPECT_EQ(pool.blocks_of(id), held);
        }
      } else if (kind == 2 && model.contains(id)) {
        EXPECT_EQ(pool.free(id), blocks_needed(model[id], bs));
        model.erase(id);
      }
      std::int64_t used = 0;
      for (const auto& [k, tokens] : model) used += blocks_needed(tokens, bs);
      ASSERT_EQ(pool.free_blocks() + used, total);
      ASSERT_GE(pool.free_blocks(), 0);
      ASSERT_TRUE(pool.conserves());
    }
  }
}

TEST(ModelProfileTest, KvBytes) {
  const ModelProfile& big = model_profile("llama3-70b");
  EXPECT_NEAR(kv_bytes(8192, big) / 1e9, 2.7, 0.05);
  EXPECT_NEAR(big.kv_bytes_per_token, 2.7e9 / 8192, 0.03 * 2.7e9 / 8192);
  EXPECT_EQ(kv_bytes(0, big), 0.0);
  EXPECT_THROW(model_profile("gpt-unknown"), std::invalid_argument);
}

TEST(ModelProfileTest, PoolSizingFromMemory) {
  const ModelProfile& m = model_profile("llama3-8b");
  const double usable = m.weights_bytes + 16.0 * m.kv_bytes_per_token * 100.5;
  EXPECT_EQ(pool_blocks_for(m, usable, 16), 100);
  EXPECT_THROW(pool_blocks_for(m, m.weights_bytes * 0.5, 16), std::invalid_argument);
}

}  // namespace
}  // namespace llmsched
