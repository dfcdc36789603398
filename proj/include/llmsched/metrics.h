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

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmsched/cluster.h"
#include "llmsched/record.h"
#include "llmsched/workload.h"

namespace llmsched {

// Nearest rank: sorted[ceil(p / 100 * n) - 1]. Throws std::invalid_argument
// for an empty list or p outside (0, 100].
double percentile(std::span<const double> values, double p);

struct Summary {
  std::size_t count = 0;
  double ttft_p50 = 0.0;
  double ttft_p95 = 0.0;
  double ttft_p99 = 0.0;
  double nttft_p50 = 0.0;
  double nttft_p95 = 0.0;
  double nttft_p99 = 0.0;
  double tgt_p50 = 0.0;
  double tgt_p95 = 0.0;
  double tgt_p99 = 0.0;
  double preemption_rate = 0.0;  // fraction of requests preempted at least once
  double throughput = 0.0;       // finished requests per second of span

  bool operator==(const Summary&) const = default;
};

Summary summarize(std::span<const MetricsRecord> records);

// Column names and values of a Summary in serialization order.
const std::vector<std::string>& summary_columns();
std::vector<double> summary_values(const Summary& s);

void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records);

// A labelled summary row, e.g. {policy, balancer, factor} plus the metrics.
struct SummaryRow {
  std::vector<std::pair<std::string, std::string>> labels;
  Summary summary;
};

// Label columns come from the first row; all rows must share them.
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
void write_summary_json(std::ostream& out, std::span<const SummaryRow> rows);

struct SweepPoint {
  double factor = 1.0;
  Summary summary;
};

// Runs the cluster on scale_qps(trace, f) for each factor, rows in parallel.
std::vector<SweepPoint> capacity_sweep(const ClusterConfig& base, const Trace& trace,
                                       std::span<const double> factors);

}  // namespace llmsched
