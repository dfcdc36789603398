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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "llmsched/types.h"

namespace llmsched {

// One request of a replayed workload. Lengths are ground truth: the simulated
// engine produces exactly output_len tokens.
struct TraceEntry {
  Seconds arrival_time = 0.0;
  TokenCount prompt_len = 1;
  TokenCount output_len = 1;

  bool operator==(const TraceEntry&) const = default;
};

using Trace = std::vector<TraceEntry>;

struct LengthPair {
  TokenCount prompt_len = 1;
  TokenCount output_len = 1;

  bool operator==(const LengthPair&) const = default;
};

// Column layouts of the header-tagged CSV trace files.
//   arrivals: arrival_s
//   sizes:    prompt_tokens,output_tokens
//   combined: arrival_s,prompt_tokens,output_tokens
enum class TraceFormat { kArrivals, kSizes, kCombined };

std::string_view to_string(TraceFormat format);
std::optional<TraceFormat> parse_trace_format(std::string_view name);

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& message, std::size_t line);

  // Same error with `context` (typically the file name) prefixed.
  TraceError with_context(std::string_view context) const;

  // 1-based line number of the offending line, 0 when not line-specific.
  std::size_t line() const { return line_; }

 private:
  struct Raw {};
  TraceError(Raw, const std::string& what, std::size_t line);

  std::size_t line_;
};

// Parsed file contents. Only the columns the format carries are filled:
// `arrivals` for arrivals/combined, `sizes` for sizes/combined.
struct TraceColumns {
  TraceFormat format = TraceFormat::kCombined;
  std::vector<Seconds> arrivals;
  std::vector<LengthPair> sizes;

  std::size_t size() const;
};

TraceColumns parse_trace(std::istream& in, TraceFormat format);
TraceColumns load_trace(const std::filesystem::path& path, TraceFormat format);

// Reads the header line to decide the format.
TraceFormat detect_trace_format(const std::filesystem::path& path);

// Requires a combined trace.
Trace to_trace(const TraceColumns& columns);

void write_trace(std::ostream& out, std::span<const TraceEntry> trace);
void write_trace(const std::filesystem::path& path,
                 std::span<const TraceEntry> trace);
void write_columns(std::ostream& out, const TraceColumns& columns);

// Assigns every arrival a size pair drawn uniformly at random. When there are
// at least as many sizes as arrivals the draw is without replacement,
// otherwise with replacement.
Trace pair_arrivals_with_sizes(std::span<const Seconds> arrivals,
                               std::span<const LengthPair> sizes,
                               std::uint64_t seed);

// Divides every arrival time by `factor`, i.e. multiplies the QPS by it.
Trace scale_qps(std::span<const TraceEntry> trace, double factor);

// Log-normal length law with the given median and log-space sigma, rounded
// and clamped to [1, max_len].
struct LengthDistribution {
  double median = 700.0;
  double sigma = 1.0;
  TokenCount max_len = 8192;
};

struct SynthSpec {
  Seconds duration = 1200.0;
  double mean_qps = 6.0;
  // Coefficient of variation of the gamma-distributed inter-arrival gaps.
  // 0 gives a constant rate, 1 a Poisson process, >1 bursty traffic.
  double burstiness = 1.5;
  LengthDistribution prompt{700.0, 1.0, 8000};
  LengthDistribution output{130.0, 1.0, 2048};
  // prompt_len + output_len never exceeds this.
  TokenCount max_context = 8192;
  std::uint64_t seed = 1;
};

void validate(const SynthSpec& spec);
Trace synthesize(const SynthSpec& spec);

struct TraceStats {
  std::size_t count = 0;
  Seconds duration = 0.0;  // last minus first arrival; 0 without arrivals
  double mean_prompt = 0.0;
  double mean_output = 0.0;
  // (mean_prompt + mean_output) / mean_output
  double beta = 0.0;
};

TraceStats trace_stats(const TraceColumns& columns);

}  // namespace llmsched
