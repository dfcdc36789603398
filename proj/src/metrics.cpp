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

#include "llmsched/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <ostream>
#include <stdexcept>

#include "llmsched/parallel.h"

namespace llmsched {

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty list");
  if (!(p > 0.0 && p <= 100.0)) {
    throw std::invalid_argument(fmt::format("percentile rank {} not in (0, 100]", p));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Summary summarize(std::span<const MetricsRecord> records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::vector<double> ttft, nttft, tgt;
  ttft.reserve(records.size());
  nttft.reserve(records.size());
  tgt.reserve(records.size());
  std::size_t preempted = 0;
  Seconds first_arrival = records.front().arrival_time;
  Seconds last_finish = records.front().finish_time;
  for (const MetricsRecord& r : records) {
    ttft.push_back(r.ttft());
    nttft.push_back(r.normalized_ttft());
    tgt.push_back(r.tgt());
    if (r.preempt_count > 0) ++preempted;
    first_arrival = std::min(first_arrival, r.arrival_time);
    last_finish = std::max(last_finish, r.finish_time);
  }
  Summary s;
  s.count = records.size();
  s.ttft_p50 = percentile(ttft, 50);
  s.ttft_p95 = percentile(ttft, 95);
  s.ttft_p99 = percentile(ttft, 99);
  s.nttft_p50 = percentile(nttft, 50);
  s.nttft_p95 = percentile(nttft, 95);
  s.nttft_p99 = percentile(nttft, 99);
  s.tgt_p50 = percentile(tgt, 50);
  s.tgt_p95 = percentile(tgt, 95);
  s.tgt_p99 = percentile(tgt, 99);
  const auto n = static_cast<double>(records.size());
  s.preemption_rate = static_cast<double>(preempted) / n;
  const Seconds span = last_finish - first_arrival;
  s.throughput = span > 0.0 ? n / span : 0.0;
  return s;
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> kColumns = {
      "count",     "ttft_p50_s", "ttft_p95_s", "ttft_p99_s",
      "nttft_p50", "nttft_p95",  "nttft_p99",  "tgt_p50_s",
      "tgt_p95_s", "tgt_p99_s",  "preemption_rate", "throughput_rps"};
  return kColumns;
}

std::vector<double> summary_values(const Summary& s) {
  return {static_cast<double>(s.count), s.ttft_p50, s.ttft_p95, s.ttft_p99,
          s.nttft_p50, s.nttft_p95, s.nttft_p99, s.tgt_p50, s.tgt_p95, s.tgt_p99,
          s.preemption_rate, s.throughput};
}

void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << "id,server,arrival_s,first_token_s,finish_s,prompt_tokens,output_tokens,"
         "preempt_count,ttft_s,normalized_ttft,tgt_s\n";
  for (const MetricsRecord& r : records) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.id, r.server,
                       r.arrival_time, r.first_token_time, r.finish_time, r.prompt_len,
                       r.output_len, r.preempt_count, r.ttft(), r.normalized_ttft(),
                       r.tgt());
  }
}

namespace {

void check_labels(std::span<const SummaryRow> rows) {
  for (const SummaryRow& row : rows) {
    if (row.labels.size() != rows.front().labels.size()) {
      throw std::invalid_argument("summary rows carry different labels");
    }
    for (std::size_t i = 0; i < row.labels.size(); ++i) {
      if (row.labels[i].first != rows.front().labels[i].first) {
        throw std::invalid_argument("summary rows carry different labels");
      }
    }
  }
}

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  check_labels(rows);
  std::vector<std::string> header;
  if (!rows.empty()) {
    for (const auto& [key, value] : rows.front().labels) header.push_back(key);
  }
  for (const std::string& c : summary_columns()) header.push_back(c);
  out << fmt::format("{}\n", fmt::join(header, ","));
  for (const SummaryRow& row : rows) {
    std::vector<std::string> cells;
    for (const auto& [key, value] : row.labels) cells.push_back(value);
    cells.push_back(fmt::format("{}", row.summary.count));
    const std::vector<double> values = summary_values(row.summary);
    for (std::size_t i = 1; i < values.size(); ++i) {
      cells.push_back(fmt::format("{}", values[i]));
    }
    out << fmt::format("{}\n", fmt::join(cells, ","));
  }
}

void write_summary_json(std::ostream& out, std::span<const SummaryRow> rows) {
  check_labels(rows);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  const std::vector<std::string>& columns = summary_columns();
  for (const SummaryRow& row : rows) {
    nlohmann::ordered_json obj;
    for (const auto& [key, value] : row.labels) obj[key] = value;
    obj["count"] = row.summary.count;
    const std::vector<double> values = summary_values(row.summary);
    for (std::size_t i = 1; i < values.size(); ++i) obj[columns[i]] = values[i];
    doc.push_back(std::move(obj));
  }
  out << doc.dump(2) << "\n";
}

std::vector<SweepPoint> capacity_sweep(const ClusterConfig& base, const Trace& trace,
                                       std::span<const double> factors) {
  std::vector<Experiment> experiments;
  experiments.reserve(factors.size());
  for (double f : factors) experiments.push_back({base, scale_qps(trace, f)});
  const std::vector<ClusterResult> results = run_experiments(experiments);
  std::vector<SweepPoint> out;
  out.reserve(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    out.push_back({factors[i], summarize(results[i].records)});
  }
  return out;
}

}  // namespace llmsched
