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

#include "llmsched/workload.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>

namespace llmsched {
namespace {

constexpr std::string_view kArrivalHeader = "arrival_s";
constexpr std::string_view kSizesHeader = "prompt_tokens,output_tokens";
constexpr std::string_view kCombinedHeader =
    "arrival_s,prompt_tokens,output_tokens";

std::string_view header_for(TraceFormat format) {
  switch (format) {
    case TraceFormat::kArrivals:
      return kArrivalHeader;
    case TraceFormat::kSizes:
      return kSizesHeader;
    case TraceFormat::kCombined:
      return kCombinedHeader;
  }
  return kCombinedHeader;
}

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

// Normalized header ("a, b" and "a,b" compare equal).
std::string normalize_header(std::string_view line) {
  std::string out;
  for (std::string_view field : split_fields(line)) {
    if (!out.empty()) out.push_back(',');
    out.append(field);
  }
  return out;
}

Seconds parse_arrival(std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw TraceError(fmt::format("invalid arrival time '{}'", field), line);
  }
  if (!std::isfinite(value) || value < 0.0) {
    throw TraceError(fmt::format("arrival time must be finite and >= 0, got {}",
                                 field),
                     line);
  }
  return value;
}

TokenCount parse_length(std::string_view field, std::size_t line) {
  TokenCount value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw TraceError(fmt::format("invalid token count '{}'", field), line);
  }
  if (value < 1) {
    throw TraceError(
        fmt::format("token counts must be positive, got {}", value), line);
  }
  return value;
}

}  // namespace

std::string_view to_string(TraceFormat format) {
  switch (format) {
    case TraceFormat::kArrivals:
      return "arrivals";
    case TraceFormat::kSizes:
      return "sizes";
    case TraceFormat::kCombined:
      return "combined";
  }
  return "combined";
}

std::optional<TraceFormat> parse_trace_format(std::string_view name) {
  if (name == "arrivals") return TraceFormat::kArrivals;
  if (name == "sizes") return TraceFormat::kSizes;
  if (name == "combined") return TraceFormat::kCombined;
  return std::nullopt;
}

TraceError::TraceError(const std::string& message, std::size_t line)
    : std::runtime_error(line == 0 ? message
                                   : fmt::format("line {}: {}", line, message)),
      line_(line) {}

TraceError::TraceError(Raw, const std::string& what, std::size_t line)
    : std::runtime_error(what), line_(line) {}

TraceError TraceError::with_context(std::string_view context) const {
  return TraceError(Raw{}, fmt::format("{}: {}", context, what()), line_);
}

std::size_t TraceColumns::size() const {
  return format == TraceFormat::kSizes ? sizes.size() : arrivals.size();
}

TraceColumns parse_trace(std::istream& in, TraceFormat format) {
  TraceColumns columns;
  columns.format = format;
  const bool has_arrival = format != TraceFormat::kSizes;
  const bool has_sizes = format != TraceFormat::kArrivals;
  const std::size_t width =
      format == TraceFormat::kCombined ? 3 : (has_sizes ? 2 : 1);

  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      const std::string header = normalize_header(line);
      if (header != header_for(format)) {
        throw TraceError(fmt::format("expected header '{}' for {} trace, got '{}'",
                                     header_for(format), to_string(format),
                                     header),
                         line_no);
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw TraceError(
          fmt::format("expected {} columns, got {}", width, fields.size()),
          line_no);
    }
    std::size_t col = 0;
    if (has_arrival) {
      const Seconds t = parse_arrival(fields[col++], line_no);
      if (!columns.arrivals.empty() && t < columns.arrivals.back()) {
        throw TraceError("unsorted arrivals", line_no);
      }
      columns.arrivals.push_back(t);
    }
    if (has_sizes) {
      LengthPair pair;
      pair.prompt_len = parse_length(fields[col++], line_no);
      pair.output_len = parse_length(fields[col++], line_no);
      columns.sizes.push_back(pair);
    }
  }
  if (!header_seen) throw TraceError("empty trace: no header line", 0);
  if (columns.size() == 0) throw TraceError("trace has no entries", 0);
  return columns;
}

TraceColumns load_trace(const std::filesystem::path& path, TraceFormat format) {
  std::ifstream in(path);
  if (!in) throw TraceError(fmt::format("cannot open '{}'", path.string()), 0);
  try {
    return parse_trace(in, format);
  } catch (const TraceError& e) {
    throw e.with_context(path.string());
  }
}

TraceFormat detect_trace_format(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(fmt::format("cannot open '{}'", path.string()), 0);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string header = normalize_header(line);
    for (TraceFormat f :
         {TraceFormat::kArrivals, TraceFormat::kSizes, TraceFormat::kCombined}) {
      if (header == header_for(f)) return f;
    }
    throw TraceError(fmt::format("unrecognized header '{}'", header), line_no);
  }
  throw TraceError(fmt::format("{}: empty trace", path.string()), 0);
}

Trace to_trace(const TraceColumns& columns) {
  if (columns.format != TraceFormat::kCombined) {
    throw std::invalid_argument(
        fmt::format("to_trace needs a combined trace, got {}",
                    to_string(columns.format)));
  }
  Trace trace;
  trace.reserve(columns.arrivals.size());
  for (std::size_t i = 0; i < columns.arrivals.size(); ++i) {
    trace.push_back({columns.arrivals[i], columns.sizes[i].prompt_len,
                     columns.sizes[i].output_len});
  }
  return trace;
}

void write_trace(std::ostream& out, std::span<const TraceEntry> trace) {
  fmt::print(out, "{}\n", kCombinedHeader);
  for (const TraceEntry& e : trace) {
    fmt::print(out, "{},{},{}\n", e.arrival_time, e.prompt_len, e.output_len);
  }
}

void write_trace(const std::filesystem::path& path,
                 std::span<const TraceEntry> trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  write_trace(out, trace);
}

void write_columns(std::ostream& out, const TraceColumns& columns) {
  switch (columns.format) {
    case TraceFormat::kCombined:
      write_trace(out, to_trace(columns));
      return;
    case TraceFormat::kArrivals:
      fmt::print(out, "{}\n", kArrivalHeader);
      for (Seconds t : columns.arrivals) fmt::print(out, "{}\n", t);
      return;
    case TraceFormat::kSizes:
      fmt::print(out, "{}\n", kSizesHeader);
      for (const LengthPair& p : columns.sizes) {
        fmt::print(out, "{},{}\n", p.prompt_len, p.output_len);
      }
      return;
  }
}

Trace pair_arrivals_with_sizes(std::span<const Seconds> arrivals,
                               std::span<const LengthPair> sizes,
                               std::uint64_t seed) {
  if (arrivals.empty()) throw std::invalid_argument("no arrivals to pair");
  if (sizes.empty()) throw std::invalid_argument("no sizes to pair");
  if (!std::is_sorted(arrivals.begin(), arrivals.end())) {
    throw std::invalid_argument("unsorted arrivals");
  }

  std::mt19937_64 rng(seed);
  Trace trace;
  trace.reserve(arrivals.size());
  if (arrivals.size() <= sizes.size()) {
    // Partial Fisher-Yates: the first arrivals.size() slots become a uniform
    // sample without replacement.
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
      const LengthPair& p = sizes[order[i]];
      trace.push_back({arrivals[i], p.prompt_len, p.output_len});
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, sizes.size() - 1);
    for (Seconds t : arrivals) {
      const LengthPair& p = sizes[pick(rng)];
      trace.push_back({t, p.prompt_len, p.output_len});
    }
  }
  return trace;
}

Trace scale_qps(std::span<const TraceEntry> trace, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument(
        fmt::format("QPS scale factor must be positive and finite, got {}",
                    factor));
  }
  Trace out(trace.begin(), trace.end());
  for (TraceEntry& e : out) e.arrival_time /= factor;
  return out;
}

void validate(const SynthSpec& spec) {
  const auto require = [](bool ok, std::string_view what) {
    if (!ok) throw std::invalid_argument(fmt::format("invalid synth spec: {}", what));
  };
  require(std::isfinite(spec.duration) && spec.duration > 0.0, "duration must be > 0");
  require(std::isfinite(spec.mean_qps) && spec.mean_qps > 0.0, "mean_qps must be > 0");
  require(std::isfinite(spec.burstiness) && spec.burstiness >= 0.0,
          "burstiness must be >= 0");
  for (const LengthDistribution* d : {&spec.prompt, &spec.output}) {
    require(std::isfinite(d->median) && d->median > 0.0, "length median must be > 0");
    require(std::isfinite(d->sigma) && d->sigma >= 0.0, "length sigma must be >= 0");
    require(d->max_len >= 1, "length max must be >= 1");
  }
  require(spec.max_context >= 2, "max_context must be >= 2");
}

Trace synthesize(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  const double mean_gap = 1.0 / spec.mean_qps;
  std::gamma_distribution<double> gap_dist(
      spec.burstiness > 0.0 ? 1.0 / (spec.burstiness * spec.burstiness) : 1.0,
      spec.burstiness > 0.0 ? mean_gap * spec.burstiness * spec.burstiness : 1.0);
  std::lognormal_distribution<double> prompt_dist(std::log(spec.prompt.median),
                                                  spec.prompt.sigma);
  std::lognormal_distribution<double> output_dist(std::log(spec.output.median),
                                                  spec.output.sigma);

  const auto draw_length = [&rng](std::lognormal_distribution<double>& dist,
                                  TokenCount hi) {
    const double x = std::round(dist(rng));
    if (!(x >= 1.0)) return TokenCount{1};
    if (x >= static_cast<double>(hi)) return hi;
    return static_cast<TokenCount>(x);
  };

  Trace trace;
  trace.reserve(static_cast<std::size_t>(spec.duration * spec.mean_qps * 1.1) + 16);
  Seconds t = 0.0;
  while (true) {
    t += spec.burstiness > 0.0 ? gap_dist(rng) : mean_gap;
    if (t >= spec.duration) break;
    TraceEntry e;
    e.arrival_time = t;
    e.prompt_len = draw_length(
        prompt_dist, std::min(spec.prompt.max_len, spec.max_context - 1));
    e.output_len = draw_length(
        output_dist, std::min(spec.output.max_len, spec.max_context - e.prompt_len));
    trace.push_back(e);
  }
  return trace;
}

TraceStats trace_stats(const TraceColumns& columns) {
  TraceStats stats;
  stats.count = columns.size();
  if (!columns.arrivals.empty()) {
    stats.duration = columns.arrivals.back() - columns.arrivals.front();
  }
  if (!columns.sizes.empty()) {
    double in = 0.0;
    double out = 0.0;
    for (const LengthPair& p : columns.sizes) {
      in += static_cast<double>(p.prompt_len);
      out += static_cast<double>(p.output_len);
    }
    const double n = static_cast<double>(columns.sizes.size());
    stats.mean_prompt = in / n;
    stats.mean_output = out / n;
    stats.beta = (in + out) / out;
  }
  return stats;
}

}  // namespace llmsched
