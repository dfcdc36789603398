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

#include "llmsched/types.h"

namespace llmsched {

// Outcome of one finished request.
struct MetricsRecord {
  RequestId id = 0;
  Seconds arrival_time = 0.0;
  Seconds first_token_time = 0.0;
  Seconds finish_time = 0.0;
  TokenCount prompt_len = 1;
  TokenCount output_len = 1;
  int preempt_count = 0;
  std::size_t server = 0;

  Seconds ttft() const { return first_token_time - arrival_time; }
  double normalized_ttft() const {
    return ttft() / static_cast<double>(prompt_len);
  }
  Seconds tgt() const { return finish_time - arrival_time; }

  bool operator==(const MetricsRecord&) const = default;
};

}  // namespace llmsched
