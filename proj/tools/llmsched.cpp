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

// Command-line front end: run, sweep, validate-trace, synth.

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "llmsched/engine.h"
#include "llmsched/experiment.h"
#include "llmsched/metrics.h"
#include "llmsched/workload.h"

namespace fs = std::filesystem;
using namespace llmsched;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

TraceFormat format_or_throw(const std::string& name) {
  const std::optional<TraceFormat> f = parse_trace_format(name);
  if (!f) throw ConfigError(fmt::format("unknown trace format '{}'", name));
  return *f;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "overrides the config seed");
  cmd->add_option("--out-dir", flags.out_dir, "overrides output.dir");
  cmd->add_option("--set", flags.sets, "key.path=value override (repeatable)");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  std::vector<std::string> sets = flags.sets;
  if (flags.seed) sets.push_back(fmt::format("seed={}", *flags.seed));
  ExperimentConfig c = load_config(flags.config, sets);
  if (!flags.out_dir.empty()) c.out_dir = flags.out_dir;
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::string combo_name(const Combination& k) {
  return fmt::format("{}_{}", to_string(k.policy), to_string(k.balancer));
}

void write_config(const ExperimentConfig& c) {
  std::ofstream out = open_out(c.out_dir / "config.json");
  out << config_to_json(c).dump(2) << "\n";
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig c = resolve_config(flags);
  const Trace trace = build_trace(c);
  if (trace.empty()) throw ConfigError("workload produced no requests");
  const std::vector<RunResult> results = run_all(c, trace);

  fs::create_directories(c.out_dir);
  write_config(c);
  std::vector<SummaryRow> rows;
  for (const RunResult& r : results) {
    const std::string name = combo_name(r.combination);
    {
      std::ofstream out = open_out(c.out_dir / fmt::format("records_{}.csv", name));
      write_records_csv(out, r.result.records);
    }
    if (c.write_events) {
      std::ofstream out = open_out(c.out_dir / fmt::format("events_{}.csv", name));
      write_event_log(out, r.result.events);
    }
    rows.push_back({{{"policy", std::string(to_string(r.combination.policy))},
                     {"balancer", std::string(to_string(r.combination.balancer))}},
                    r.summary});
    fmt::print("{:<10} {:<7} p50_ttft={:.4f}s p95_ttft={:.4f}s p50_tgt={:.3f}s "
               "preempt={:.4f}\n",
               to_string(r.combination.policy), to_string(r.combination.balancer),
               r.summary.ttft_p50, r.summary.ttft_p95, r.summary.tgt_p50,
               r.summary.preemption_rate);
  }
  std::ofstream csv = open_out(c.out_dir / "summary.csv");
  write_summary_csv(csv, rows);
  std::ofstream json = open_out(c.out_dir / "summary.json");
  write_summary_json(json, rows);
  fmt::print("wrote {} runs to {}\n", rows.size(), c.out_dir.string());
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  const ExperimentConfig c = resolve_config(flags);
  const Trace trace = build_trace(c);
  if (trace.empty()) throw ConfigError("workload produced no requests");
  const std::vector<SweepRow> sweep = sweep_all(c, trace);

  fs::create_directories(c.out_dir);
  write_config(c);
  std::vector<SummaryRow> rows;
  for (const SweepRow& s : sweep) {
    rows.push_back({{{"policy", std::string(to_string(s.combination.policy))},
                     {"balancer", std::string(to_string(s.combination.balancer))},
                     {"factor", fmt::format("{}", s.point.factor)}},
                    s.point.summary});
  }
  std::ofstream csv = open_out(c.out_dir / "sweep.csv");
  write_summary_csv(csv, rows);
  std::ofstream json = open_out(c.out_dir / "sweep.json");
  write_summary_json(json, rows);
  fmt::print("wrote {} sweep rows to {}\n", rows.size(), c.out_dir.string());
  return kExitOk;
}

int cmd_validate(const std::string& path, const std::string& format_name) {
  const TraceFormat format = format_name == "auto"
                                 ? detect_trace_format(path)
                                 : format_or_throw(format_name);
  const TraceColumns columns = load_trace(path, format);
  const TraceStats s = trace_stats(columns);
  fmt::print("format: {}\n", to_string(format));
  fmt::print("count: {}\n", s.count);
  fmt::print("duration_s: {}\n", s.duration);
  if (format != TraceFormat::kArrivals) {
    fmt::print("mean_prompt_tokens: {}\n", s.mean_prompt);
    fmt::print("mean_output_tokens: {}\n", s.mean_output);
    fmt::print("beta: {}\n", s.beta);
  }
  if (format != TraceFormat::kSizes && s.duration > 0.0) {
    fmt::print("mean_qps: {}\n", static_cast<double>(s.count - 1) / s.duration);
  }
  return kExitOk;
}

struct SynthFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "combined";
};

int cmd_synth(const SynthFlags& flags) {
  SynthSpec spec;
  std::uint64_t seed = 1;
  if (!flags.config.empty()) {
    std::vector<std::string> sets = flags.sets;
    if (flags.seed) sets.push_back(fmt::format("seed={}", *flags.seed));
    const ExperimentConfig c = load_config(flags.config, sets);
    if (c.workload.kind != WorkloadKind::kSynth) {
      throw ConfigError("synth needs a config with a synthetic workload");
    }
    spec = c.workload.synth;
    seed = c.seed;
  } else {
    if (!flags.sets.empty()) throw ConfigError("--set requires --config");
    if (flags.seed) seed = *flags.seed;
  }
  spec.seed = seed;
  const Trace trace = synthesize(spec);

  const TraceFormat format = format_or_throw(flags.format);
  TraceColumns columns;
  columns.format = format;
  for (const TraceEntry& e : trace) {
    columns.arrivals.push_back(e.arrival_time);
    columns.sizes.push_back({e.prompt_len, e.output_len});
  }
  if (flags.out.empty() || flags.out == "-") {
    write_columns(std::cout, columns);
  } else {
    std::ofstream out = open_out(flags.out);
    write_columns(out, columns);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator of LLM serving clusters"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "simulate every policy/balancer pair");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "serving-capacity sweep over QPS factors");
  add_common(sweep, sweep_flags);

  std::string trace_path;
  std::string trace_format = "auto";
  CLI::App* validate = app.add_subcommand("validate-trace", "check a trace and print stats");
  validate->add_option("trace", trace_path, "trace CSV")->required();
  validate->add_option("--format", trace_format, "auto|combined|arrivals|sizes");

  SynthFlags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "emit a synthetic trace");
  synth->add_option("--config", synth_flags.config, "config whose workload.synth is used")
      ->check(CLI::ExistingFile);
  synth->add_option("--set", synth_flags.sets, "key.path=value override (repeatable)");
  synth->add_option("--seed", synth_flags.seed, "random seed");
  synth->add_option("--out", synth_flags.out, "output CSV (default stdout)");
  synth->add_option("--format", synth_flags.format, "combined|arrivals|sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*validate) return cmd_validate(trace_path, trace_format);
    if (*synth) return cmd_synth(synth_flags);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitValidation;
  } catch (const TraceError& e) {
    fmt::print(stderr, "trace error: {}\n", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
