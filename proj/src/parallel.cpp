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

#include "llmsched/parallel.h"

#include <omp.h>

#include <exception>

namespace llmsched {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void serial_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

std::vector<ClusterResult> run_experiments(std::span<const Experiment> experiments) {
  std::vector<ClusterResult> out(experiments.size());
  parallel_for(experiments.size(), [&](std::size_t i) {
    out[i] = run_cluster(experiments[i].config, experiments[i].trace);
  });
  return out;
}

std::vector<ClusterResult> run_experiments_serial(
    std::span<const Experiment> experiments) {
  std::vector<ClusterResult> out(experiments.size());
  serial_for(experiments.size(), [&](std::size_t i) {
    out[i] = run_cluster(experiments[i].config, experiments[i].trace);
  });
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace llmsched
