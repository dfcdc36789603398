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

#include "llmsched/request.h"

namespace llmsched {

std::string_view to_string(RequestState state) {
  switch (state) {
    case RequestState::kWaiting:
      return "waiting";
    case RequestState::kPrefilling:
      return "prefilling";
    case RequestState::kDecoding:
      return "decoding";
    case RequestState::kFinished:
      return "finished";
  }
  return "waiting";
}

Request Request::make(RequestId id, Seconds arrival, TokenCount prompt_len,
                      TokenCount output_len) {
  Request r;
  r.id = id;
  r.arrival_time = arrival;
  r.prompt_len = prompt_len;
  r.output_len = output_len;
  r.prefill_target = prompt_len;
  r.enqueue_time = arrival;
  return r;
}

}  // namespace llmsched
