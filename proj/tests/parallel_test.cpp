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

#include <atomic>
#include <random>
#include <stdexcept>

#include "llmsched/parallel.h"
#include "test_util.h"

namespace llmsched {
namespace {

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  parallel_for(0, [](std::size_t) { FAIL(); });
}

TEST(ParallelForTest, RethrowsLowestIndexError) {
  try {
    parallel_for(50, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(RunExperimentsTest, ParallelMatchesSerial) {
  std::mt19937_64 rng(5);
  std::vector<Experiment> ex;
  for (int k = 0; k < 12; ++k) {
    ClusterConfig c;
    c.n_servers = 1 + k % 3;
    c.engine = testing::small_engine(200);
    c.policy.kind = static_cast<PolicyKind>(k % 4);
    c.balancer.kind = static_cast<BalancerKind>(k % 4);
    c.seed = k;
    ex.push_back({c, testing::random_trace(rng, 150, 0.005, 500, 100)});
  }
  const auto par = run_experiments(ex);
  const auto ser = run_experiments_serial(ex);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    EXPECT_EQ(par[i].records, ser[i].records);
    EXPECT_EQ(par[i].routes, ser[i].routes);
  }
  EXPECT_GE(max_threads(), 1);
}

}  // namespace
}  // namespace llmsched
