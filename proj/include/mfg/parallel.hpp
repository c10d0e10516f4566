// Copyright 2026 The mfgsolve Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfg {

// Number of worker threads used by parallel_blocks. Defaults to the value of
// the MFG_THREADS environment variable, or the hardware concurrency.
int worker_count();
void set_worker_count(int n);

// Fixed block size used to partition index ranges. Block boundaries depend
// only on the range length, never on the worker count, so per-block partial
// results can always be combined in the same order.
std::size_t parallel_block_size();
std::size_t parallel_block_count(std::size_t n);

// Runs fn(begin, end, block_index) for every fixed-size block of [0, n).
// Blocks may execute concurrently; fn must only write to block-local or
// block-indexed storage.
void parallel_blocks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn);

// Pairwise (tree) summation with a fixed association order. Used for every
// reduction over paths so that results do not depend on the worker count.
double pairwise_sum(std::span<const double> values);

// Convenience: mean and standard error of the mean, both via pairwise sums.
struct MeanStderr {
  double mean = 0.0;
  double stderr_mean = 0.0;
};
MeanStderr mean_and_stderr(std::span<const double> values);

}  // namespace mfg
