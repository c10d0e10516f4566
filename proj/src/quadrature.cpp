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

#include "mfg/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "mfg/rng.hpp"

namespace mfg {

QuadratureRule gauss_hermite_rule(int n, double stddev) {
  if (n <= 0) throw std::invalid_argument("quadrature: node count must be positive");
  // Golub-Welsch: eigen-decompose the Jacobi matrix of the Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double beta = std::sqrt((i + 1) / 2.0);
    jacobi(i, i + 1) = beta;
    jacobi(i + 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("quadrature: eigen decomposition failed");
  }
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double scale = std::sqrt(2.0) * stddev;
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = scale * es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = v0 * v0;
  }
  return rule;
}

QuadratureRule common_random_rule(NoiseKind kind, double stddev, int n,
                                  std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("quadrature: draw count must be positive");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  PathRng rng = make_rng(seed, 0, RngStream::kQuadrature);
  for (int i = 0; i < n; ++i) {
    double z = 0.0;
    switch (kind) {
      case NoiseKind::gaussian:
        z = rng.gaussian();
        break;
      case NoiseKind::rademacher:
        z = static_cast<double>(rng.sign());
        break;
      case NoiseKind::zero:
        z = 0.0;
        break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = stddev * z;
  }
  return rule;
}

QuadratureRule exact_discrete_rule(NoiseKind kind, double stddev) {
  QuadratureRule rule;
  switch (kind) {
    case NoiseKind::rademacher:
      rule.nodes = {-stddev, stddev};
      rule.weights = {0.5, 0.5};
      break;
    case NoiseKind::zero:
      rule.nodes = {0.0};
      rule.weights = {1.0};
      break;
    case NoiseKind::gaussian:
      throw std::invalid_argument("quadrature: gaussian law has no exact finite rule");
  }
  return rule;
}

}  // namespace mfg
