#!/usr/bin/env python3
# Copyright 2026 The llmsched Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes synthetic length-pair traces whose means hit exact targets.

Lengths are log-normal, then nudged one token at a time until the column
sums equal count * target_mean, so the implied beta is exact.
"""

import argparse

import numpy as np


def exact_column(rng, n, mean, sigma, lo, hi):
    x = rng.lognormal(np.log(mean) - sigma * sigma / 2, sigma, n)
    x = np.clip(np.rint(x), lo, hi).astype(np.int64)
    want = mean * n
    while x.sum() != want:
        i = rng.integers(n)
        if x.sum() < want and x[i] < hi:
            x[i] += 1
        elif x.sum() > want and x[i] > lo:
            x[i] -= 1
    return x


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--mean-in", type=int, required=True)
    ap.add_argument("--mean-out", type=int, required=True)
    ap.add_argument("--sigma-in", type=float, default=1.0)
    ap.add_argument("--sigma-out", type=float, default=1.0)
    ap.add_argument("--max-context", type=int, default=8192)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    out_cap = min(2048, args.max_context // 4)
    outs = exact_column(rng, args.count, args.mean_out, args.sigma_out, 1, out_cap)
    ins = exact_column(rng, args.count, args.mean_in, args.sigma_in, 1,
                       args.max_context - out_cap)
    with open(args.out, "w") as f:
        f.write(f"# {args.count} synthetic length pairs; "
                f"mean prompt {args.mean_in}, mean output {args.mean_out}\n")
        f.write("prompt_tokens,output_tokens\n")
        for a, b in zip(ins, outs):
            f.write(f"{a},{b}\n")


if __name__ == "__main__":
    main()
