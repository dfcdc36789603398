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

#include <cstdint>
#include <optional>
#include <string_view>

#include "llmsched/types.h"

namespace llmsched {

// A preempted request goes back to kWaiting with preempt_count > 0 and a
// prefill target that covers its prompt plus the tokens it already produced.
enum class RequestState { kWaiting, kPrefilling, kDecoding, kFinished };

std::string_view to_string(RequestState state);

struct Request {
  RequestId id = 0;
  Seconds arrival_time = 0.0;
  TokenCount prompt_len = 1;
  TokenCount output_len = 1;

  RequestState state = RequestState::kWaiting;
  // Tokens the next prefill must process: prompt_len on first dispatch,
  // prompt_len + generated when recomputing after a preemption.
  TokenCount prefill_target = 0;
  TokenCount prefill_done = 0;
  TokenCount generated = 0;
  // Tokens whose KV is resident. The newest generated token has no KV yet,
  // so a decoding request holds prompt_len + generated - 1.
  TokenCount context_len = 0;

  Seconds enqueue_time = 0.0;
  std::optional<Seconds> first_token_time;
  std::optional<Seconds> finish_time;
  int preempt_count = 0;
  std::uint64_t dispatch_seq = 0;

  static Request make(RequestId id, Seconds arrival, TokenCount prompt_len,
                      TokenCount output_len);

  TokenCount pending_prefill() const { return prefill_target - prefill_done; }
  TokenCount remaining_output() const { return output_len - generated; }
  bool running() const {
    return state == RequestState::kPrefilling || state == RequestState::kDecoding;
  }
};

}  // namespace llmsched
