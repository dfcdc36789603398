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

#include "llmsched/experiment.h"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include "llmsched/kvmem.h"
#include "llmsched/parallel.h"

namespace llmsched {
namespace {

using nlohmann::json;

// Reads the keys of one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) {
      throw ConfigError(fmt::format("{} must be an object", label()));
    }
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError(fmt::format("unknown key '{}'", path(key)));
      }
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(*v, path(key));
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) out = convert<T>(*v, path(key));
  }

  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(fmt::format("{} must be a boolean", where));
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        throw ConfigError(fmt::format("{} must be an integer", where));
      }
      if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0) {
        throw ConfigError(fmt::format("{} must be >= 0", where));
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (v.is_string() && (v.get<std::string>() == "inf" ||
                            v.get<std::string>() == "infinity")) {
        return std::numeric_limits<T>::infinity();
      }
      if (!v.is_number()) throw ConfigError(fmt::format("{} must be a number", where));
      return v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(fmt::format("{} must be a string", where));
      return v.get<std::string>();
    }
  }

 private:
  std::string label() const { return where_.empty() ? "config" : where_; }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

void read_lengths(const json& v, const std::string& where, LengthDistribution& out) {
  ObjectReader r(v, where);
  r.get("median", out.median);
  r.get("sigma", out.sigma);
  r.get("max", out.max_len);
}

WorkloadConfig read_workload(const json& v, const std::filesystem::path& base) {
  WorkloadConfig w;
  ObjectReader r(v, "workload");
  std::string trace, arrivals, sizes;
  r.get("trace", trace);
  r.get("arrivals", arrivals);
  r.get("sizes", sizes);
  r.get("qps_scale", w.qps_scale);
  const json* synth = r.find("synth");

  const int sources = (!trace.empty()) + (!arrivals.empty() || !sizes.empty()) +
                      (synth != nullptr);
  if (sources > 1) {
    throw ConfigError("workload: give exactly one of trace, arrivals+sizes, synth");
  }
  if (!trace.empty()) {
    w.kind = WorkloadKind::kTrace;
    w.trace = resolve(base, trace);
  } else if (!arrivals.empty() || !sizes.empty()) {
    if (arrivals.empty() || sizes.empty()) {
      throw ConfigError("workload: arrivals and sizes must be given together");
    }
    w.kind = WorkloadKind::kArrivalsSizes;
    w.arrivals = resolve(base, arrivals);
    w.sizes = resolve(base, sizes);
  } else {
    w.kind = WorkloadKind::kSynth;
    if (synth) {
      ObjectReader s(*synth, "workload.synth");
      s.get("duration_s", w.synth.duration);
      s.get("mean_qps", w.synth.mean_qps);
      s.get("burstiness", w.synth.burstiness);
      s.get("max_context", w.synth.max_context);
      if (const json* p = s.find("prompt")) {
        read_lengths(*p, "workload.synth.prompt", w.synth.prompt);
      }
      if (const json* o = s.find("output")) {
        read_lengths(*o, "workload.synth.output", w.synth.output);
      }
    }
  }
  return w;
}

template <typename Kind>
std::vector<Kind> read_kinds(const json& v, const std::string& where,
                             std::optional<Kind> (*parse)(std::string_view)) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError(fmt::format("{} must be a non-empty array", where));
  }
  std::vector<Kind> out;
  for (const json& item : v) {
    const std::string name = ObjectReader::convert<std::string>(item, where);
    const std::optional<Kind> k = parse(name);
    if (!k) throw ConfigError(fmt::format("{}: unknown name '{}'", where, name));
    out.push_back(*k);
  }
  return out;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void apply_set(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("--set expects key=value, got '{}'", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError(fmt::format("--set: bad key '{}'", key));
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) {
      throw ConfigError(fmt::format("--set: '{}' crosses a non-object", key));
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  ObjectReader r(doc, "");
  r.get("seed", c.seed);
  if (const json* w = r.find("workload")) c.workload = read_workload(*w, base_dir);
  r.get("model", c.model);
  r.get("hardware", c.hardware);

  if (const json* e = r.find("engine")) {
    ObjectReader er(*e, "engine");
    er.get("memory_utilization", c.memory_utilization);
    er.get("total_blocks", c.total_blocks);
    er.get("block_size", c.block_size);
    er.get("max_tokens_per_batch", c.max_tokens_per_batch);
    er.get("max_running", c.max_running);
    if (const json* cost = er.find("cost")) {
      ObjectReader cr(*cost, "engine.cost");
      cr.get("mem_base_s", c.cost.mem_base_s);
      cr.get("mem_per_kv_token_s", c.cost.mem_per_kv_token_s);
      cr.get("compute_per_token_s", c.cost.compute_per_token_s);
      cr.get("overhead_s", c.cost.overhead_s);
    }
  }
  if (const json* cl = r.find("cluster")) {
    ObjectReader cr(*cl, "cluster");
    cr.get("n_servers", c.n_servers);
  }
  if (const json* p = r.find("policies")) {
    c.policies = read_kinds<PolicyKind>(*p, "policies", &parse_policy_kind);
  }
  if (const json* b = r.find("balancers")) {
    c.balancers = read_kinds<BalancerKind>(*b, "balancers", &parse_balancer_kind);
  }
  if (const json* pp = r.find("policy_params")) {
    ObjectReader pr(*pp, "policy_params");
    if (const json* l = pr.find("larry")) {
      ObjectReader lr(*l, "policy_params.larry");
      lr.get("alpha", c.larry.alpha);
    }
    if (const json* t = pr.find("trail_plus")) {
      ObjectReader tr(*t, "policy_params.trail_plus");
      tr.get("c", c.trail.c);
    }
    if (const json* n = pr.find("nopreempt")) {
      ObjectReader nr(*n, "policy_params.nopreempt");
      nr.get("max_context", c.nopreempt.max_context);
      nr.get("max_output", c.nopreempt.max_output);
    }
  }
  if (const json* bp = r.find("balancer_params")) {
    ObjectReader br(*bp, "balancer_params");
    br.get("poll_interval_s", c.balancer.poll_interval_s);
    br.get("beta_prior", c.balancer.beta_prior);
    br.get("beta_fixed", c.balancer.beta_fixed);
  }
  if (const json* s = r.find("sweep")) {
    ObjectReader sr(*s, "sweep");
    if (const json* f = sr.find("factors")) {
      check(f->is_array(), "sweep.factors must be an array");
      for (const json& x : *f) {
        c.sweep_factors.push_back(ObjectReader::convert<double>(x, "sweep.factors"));
      }
    }
  }
  if (const json* o = r.find("output")) {
    ObjectReader orr(*o, "output");
    std::string dir;
    orr.get("dir", dir);
    if (!dir.empty()) c.out_dir = resolve(base_dir, dir);
    orr.get("events", c.write_events);
  }

  // Semantic checks, reported as configuration errors.
  check(c.memory_utilization > 0.0 && c.memory_utilization <= 1.0,
        "engine.memory_utilization must lie in (0, 1]");
  check(c.n_servers >= 1, "cluster.n_servers must be >= 1");
  check(c.workload.qps_scale > 0.0 && std::isfinite(c.workload.qps_scale),
        "workload.qps_scale must be > 0");
  for (double f : c.sweep_factors) {
    check(f > 0.0 && std::isfinite(f), "sweep.factors must be positive");
  }
  for (const auto& p : {c.workload.trace, c.workload.arrivals, c.workload.sizes}) {
    check(p.empty() || std::filesystem::exists(p),
          fmt::format("file not found: {}", p.string()));
  }
  try {
    if (c.workload.kind == WorkloadKind::kSynth) {
      SynthSpec spec = c.workload.synth;
      spec.seed = c.seed;
      validate(spec);
    }
    (void)model_profile(c.model);
    (void)hardware_profile(c.hardware);
    PolicyConfig pc;
    pc.larry = c.larry;
    pc.trail = c.trail;
    pc.nopreempt = c.nopreempt;
    validate(pc);
    validate(c.balancer);
    validate(engine_config(c));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false,
                         /*ignore_comments=*/true);
  if (doc.is_discarded()) {
    throw ConfigError(fmt::format("{}: invalid JSON", path.string()));
  }
  for (const std::string& s : overrides) apply_set(doc, s);
  try {
    return parse_config(doc, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  auto& w = j["workload"];
  switch (c.workload.kind) {
    case WorkloadKind::kTrace:
      w["trace"] = c.workload.trace.string();
      break;
    case WorkloadKind::kArrivalsSizes:
      w["arrivals"] = c.workload.arrivals.string();
      w["sizes"] = c.workload.sizes.string();
      break;
    case WorkloadKind::kSynth: {
      const SynthSpec& s = c.workload.synth;
      w["synth"] = {{"duration_s", s.duration},
                    {"mean_qps", s.mean_qps},
                    {"burstiness", s.burstiness},
                    {"max_context", s.max_context},
                    {"prompt",
                     {{"median", s.prompt.median},
                      {"sigma", s.prompt.sigma},
                      {"max", s.prompt.max_len}}},
                    {"output",
                     {{"median", s.output.median},
                      {"sigma", s.output.sigma},
                      {"max", s.output.max_len}}}};
      break;
    }
  }
  w["qps_scale"] = c.workload.qps_scale;
  j["model"] = c.model;
  j["hardware"] = c.hardware;
  const EngineConfig ec = engine_config(c);
  j["engine"] = {{"memory_utilization", c.memory_utilization},
                 {"total_blocks", ec.total_blocks},
                 {"block_size", ec.block_size},
                 {"max_tokens_per_batch", ec.max_tokens_per_batch},
                 {"max_running", c.max_running ? json(*c.max_running) : json()},
                 {"cost",
                  {{"mem_base_s", ec.cost.mem_base_s},
                   {"mem_per_kv_token_s", ec.cost.mem_per_kv_token_s},
                   {"compute_per_token_s", ec.cost.compute_per_token_s},
                   {"overhead_s", ec.cost.overhead_s}}}};
  j["cluster"] = {{"n_servers", c.n_servers}};
  json policies = json::array();
  for (PolicyKind k : c.policies) policies.push_back(std::string(to_string(k)));
  j["policies"] = policies;
  json balancers = json::array();
  for (BalancerKind k : c.balancers) balancers.push_back(std::string(to_string(k)));
  j["balancers"] = balancers;
  j["policy_params"] = {
      {"larry", {{"alpha", c.larry.alpha}}},
      {"trail_plus", {{"c", c.trail.c}}},
      {"nopreempt",
       {{"max_context", c.nopreempt.max_context},
        {"max_output", c.nopreempt.max_output}}}};
  j["balancer_params"] = {
      {"poll_interval_s", std::isfinite(c.balancer.poll_interval_s)
                              ? json(c.balancer.poll_interval_s)
                              : json("inf")},
      {"beta_prior", c.balancer.beta_prior},
      {"beta_fixed", c.balancer.beta_fixed ? json(*c.balancer.beta_fixed) : json()}};
  j["sweep"] = {{"factors", c.sweep_factors}};
  j["output"] = {{"dir", c.out_dir.string()}, {"events", c.write_events}};
  return json(j);
}

EngineConfig engine_config(const ExperimentConfig& c) {
  const ModelProfile& model = model_profile(c.model);
  const HardwareProfile& hw = hardware_profile(c.hardware);
  EngineConfig e;
  e.block_size = c.block_size;
  e.max_tokens_per_batch = c.max_tokens_per_batch;
  e.max_running = c.max_running;
  e.record_events = c.write_events;
  e.total_blocks =
      c.total_blocks ? *c.total_blocks
                     : pool_blocks_for(model,
                                       hw.memory_bytes * hw.num_gpus *
                                           c.memory_utilization,
                                       c.block_size);
  e.cost = apply_overrides(default_params(model, c.hardware), c.cost);
  return e;
}

ClusterConfig cluster_config(const ExperimentConfig& c, PolicyKind policy,
                             BalancerKind balancer) {
  ClusterConfig cc;
  cc.n_servers = c.n_servers;
  cc.engine = engine_config(c);
  cc.policy.kind = policy;
  cc.policy.larry = c.larry;
  cc.policy.trail = c.trail;
  cc.policy.nopreempt = c.nopreempt;
  cc.balancer = c.balancer;
  cc.balancer.kind = balancer;
  cc.seed = c.seed;
  return cc;
}

Trace build_trace(const ExperimentConfig& c) {
  Trace trace;
  switch (c.workload.kind) {
    case WorkloadKind::kSynth: {
      SynthSpec spec = c.workload.synth;
      spec.seed = c.seed;
      trace = synthesize(spec);
      break;
    }
    case WorkloadKind::kTrace:
      trace = to_trace(load_trace(c.workload.trace, TraceFormat::kCombined));
      break;
    case WorkloadKind::kArrivalsSizes: {
      const TraceColumns a = load_trace(c.workload.arrivals, TraceFormat::kArrivals);
      const TraceColumns s = load_trace(c.workload.sizes, TraceFormat::kSizes);
      trace = pair_arrivals_with_sizes(a.arrivals, s.sizes, c.seed);
      break;
    }
  }
  if (c.workload.qps_scale != 1.0) trace = scale_qps(trace, c.workload.qps_scale);
  return trace;
}

std::vector<Combination> combinations(const ExperimentConfig& c) {
  std::vector<Combination> out;
  for (PolicyKind p : c.policies) {
    for (BalancerKind b : c.balancers) out.push_back({p, b});
  }
  return out;
}

std::vector<RunResult> run_all(const ExperimentConfig& c, const Trace& trace) {
  const std::vector<Combination> combos = combinations(c);
  std::vector<Experiment> experiments;
  for (const Combination& k : combos) {
    experiments.push_back({cluster_config(c, k.policy, k.balancer), trace});
  }
  std::vector<ClusterResult> results = run_experiments(experiments);
  std::vector<RunResult> out;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    Summary s = summarize(results[i].records);
    out.push_back({combos[i], std::move(results[i]), s});
  }
  return out;
}

std::vector<SweepRow> sweep_all(const ExperimentConfig& c, const Trace& trace) {
  if (c.sweep_factors.empty()) throw ConfigError("sweep.factors is empty");
  std::vector<SweepRow> out;
  for (const Combination& k : combinations(c)) {
    for (const SweepPoint& p :
         capacity_sweep(cluster_config(c, k.policy, k.balancer), trace, c.sweep_factors)) {
      out.push_back({k, p});
    }
  }
  return out;
}

}  // namespace llmsched
