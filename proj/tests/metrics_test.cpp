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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "llmsched/metrics.h"
#include "test_util.h"

namespace llmsched {
namespace {

TEST(PercentileTest, Examples) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(percentile(v, 50), 50.0);
  EXPECT_EQ(percentile(v, 95), 95.0);
  EXPECT_EQ(percentile(std::vector<double>{7.0}, 13), 7.0);
  EXPECT_EQ(percentile(std::vector<double>{5, 1, 3}, 100), 5.0);
  EXPECT_THROW(percentile(std::vector<double>{}, 50), std::invalid_argument);
  EXPECT_THROW(percentile(v, 0), std::invalid_argument);
  EXPECT_THROW(percentile(v, 101), std::invalid_argument);
}

TEST(PercentileTest, AgreesWithSortAndIndex) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> x(0, 10);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> v(1 + rng() % 300);
    for (double& e : v) e = x(rng);
    const double p = 0.1 + (rng() % 1000) / 10.0;
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const auto idx = static_cast<std::size_t>(std::ceil(p / 100.0 * s.size())) - 1;
    EXPECT_EQ(percentile(v, p), s[idx]);
  }
}

TEST(SummarizeTest, SingleRecord) {
  MetricsRecord r{0, 0.0, 2.0, 5.0, 100, 10, 0, 0};
  const Summary s = summarize(std::vector<MetricsRecord>{r});
  EXPECT_EQ(s.ttft_p50, 2.0);
  EXPECT_DOUBLE_EQ(s.nttft_p50, 0.02);
  EXPECT_EQ(s.tgt_p50, 5.0);
  EXPECT_EQ(s.preemption_rate, 0.0);
  EXPECT_DOUBLE_EQ(s.throughput, 0.2);
  EXPECT_THROW(summarize(std::vector<MetricsRecord>{}), std::invalid_argument);
}

TEST(SummarizeTest, PreemptionRateCountsRequests) {
  std::vector<MetricsRecord> recs(4, MetricsRecord{0, 0.0, 1.0, 2.0, 1, 1, 0, 0});
  recs[1].preempt_count = 3;
  EXPECT_EQ(summarize(recs).preemption_rate, 0.25);
}

TEST(SummarizeTest, PercentilesMonotone) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Trace t = testing::random_trace(rng, 100, 0.01, 500, 100);
    Engine e(testing::small_engine(400), testing::policy_of(PolicyKind::kLarry));
    const Summary s = summarize(e.run(t));
    EXPECT_LE(s.ttft_p50, s.ttft_p95);
    EXPECT_LE(s.ttft_p95, s.ttft_p99);
    EXPECT_LE(s.nttft_p50, s.nttft_p95);
    EXPECT_LE(s.nttft_p95, s.nttft_p99);
    EXPECT_LE(s.tgt_p50, s.tgt_p95);
    EXPECT_LE(s.tgt_p95, s.tgt_p99);
    EXPECT_GE(s.preemption_rate, 0.0);
    EXPECT_LE(s.preemption_rate, 1.0);
  }
}

TEST(WritersTest, StableCsvAndJson) {
  Summary s;
  s.count = 2;
  s.ttft_p50 = 0.5;
  std::vector<SummaryRow> rows{{{{"policy", "fcfs"}, {"balancer", "rr"}}, s}};
  std::ostringstream csv;
  write_summary_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "policy,balancer,count,ttft_p50_s,ttft_p95_s,ttft_p99_s,nttft_p50,"
            "nttft_p95,nttft_p99,tgt_p50_s,tgt_p95_s,tgt_p99_s,preemption_rate,"
            "throughput_rps");
  EXPECT_NE(csv.str().find("fcfs,rr,2,0.5,0,"), std::string::npos);
  std::ostringstream json;
  write_summary_json(json, rows);
  const auto doc = nlohmann::ordered_json::parse(json.str());
  ASSERT_EQ(doc.size(), 1u);
  auto it = doc[0].begin();
  EXPECT_EQ(it.key(), "policy");
  EXPECT_EQ(doc[0]["ttft_p50_s"], 0.5);
  EXPECT_EQ(doc[0]["count"], 2);

  std::vector<SummaryRow> mixed = rows;
  mixed.push_back({{{"policy", "larry"}}, s});
  std::ostringstream bad;
  EXPECT_THROW(write_summary_csv(bad, mixed), std::invalid_argument);
}

TEST(WritersTest, RecordsRoundTripDoubles) {
  MetricsRecord r{3, 0.1, 0.30000000000000004, 1.0 / 3.0, 7, 2, 1, 2};
  std::ostringstream out;
  write_records_csv(out, std::vector<MetricsRecord>{r});
  const std::string line = out.str().substr(out.str().find('\n') + 1);
  EXPECT_EQ(line.substr(0, line.find(",7,")),
            "3,2,0.1,0.30000000000000004,0.3333333333333333");
}

ClusterConfig sweep_cluster(PolicyKind p) {
  ClusterConfig c;
  c.engine = testing::small_engine(400);
  c.policy.kind = p;
  return c;
}

TEST(CapacitySweepTest, UnitFactorEqualsPlainRun) {
  std::mt19937_64 rng(3);
  const Trace t = testing::random_trace(rng, 200, 0.02, 600, 100);
  const ClusterConfig c = sweep_cluster(PolicyKind::kFcfs);
  const std::vector<double> f{1.0};
  const std::vector<SweepPoint> rows = capacity_sweep(c, t, f);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].summary, summarize(run_cluster(c, t).records));
}

TEST(CapacitySweepTest, FcfsTtftGrowsWithLoad) {
  SynthSpec spec;
  spec.duration = 120;
  spec.mean_qps = 4;
  const Trace t = synthesize(spec);
  ClusterConfig c = sweep_cluster(PolicyKind::kFcfs);
  c.engine.total_blocks = 4000;
  c.engine.cost = default_params(model_profile("llama3-8b"), "a100-40gb");
  const std::vector<double> f{0.5, 1.0, 2.0, 3.0, 4.0};
  const std::vector<SweepPoint> rows = capacity_sweep(c, t, f);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].summary.ttft_p50, rows[i - 1].summary.ttft_p50);
  }
}

TEST(CapacitySweepTest, LarryNoWorseThanFcfsAtHighLoad) {
  SynthSpec spec;
  spec.duration = 120;
  spec.mean_qps = 4;
  spec.prompt = {700.0, 1.3, 7000};
  const Trace t = synthesize(spec);
  ClusterConfig fcfs = sweep_cluster(PolicyKind::kFcfs);
  fcfs.engine.total_blocks = 4000;
  fcfs.engine.cost = default_params(model_profile("llama3-8b"), "a100-40gb");
  ClusterConfig larry = fcfs;
  larry.policy.kind = PolicyKind::kLarry;
  const std::vector<double> f{3.0, 4.0};
  const auto a = capacity_sweep(fcfs, t, f);
  const auto b = capacity_sweep(larry, t, f);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_LE(b[i].summary.ttft_p50, a[i].summary.ttft_p50);
  }
}

}  // namespace
}  // namespace llmsched
