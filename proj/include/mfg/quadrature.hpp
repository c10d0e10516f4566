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

#include <cstdint>
#include <vector>

#include "mfg/noise.hpp"

namespace mfg {

// Nodes and weights approximating E[f(N)] by sum_i w_i f(node_i) for a scalar
// noise variable N. Weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for N ~ Normal(0, stddev^2); exact for polynomials of
// degree up to 2 n - 1.
QuadratureRule gauss_hermite_rule(int n, double stddev);

// Frozen-sample rule: n independent draws of the increment distribution,
// shared across every expectation evaluated with the rule.
QuadratureRule common_random_rule(NoiseKind kind, double stddev, int n,
                                  std::uint64_t seed);

// Exact rule when the law has finite support (rademacher, zero); exposed so
// callers can prefer exactness when available.
QuadratureRule exact_discrete_rule(NoiseKind kind, double stddev);

}  // namespace mfg
