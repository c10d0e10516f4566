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
#include <functional>
#include <span>
#include <vector>

namespace mfg {

// Weighted particle cloud on R^d. Immutable after construction; the common
// one-dimensional statistics (mean, first two absolute moments, sorted order)
// are precomputed so repeated queries in solver loops are cheap.
class EmpiricalMeasure {
 public:
  // points is row-major with size() * dim entries; weights must be
  // nonnegative and sum to one within 1e-12.
  EmpiricalMeasure(std::vector<double> points, std::vector<double> weights,
                   int dim = 1);

  // Equal-weight cloud.
  static EmpiricalMeasure equal(std::vector<double> points, int dim = 1);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }

  std::span<const double> points() const { return points_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> point(std::size_t i) const;
  double value(std::size_t i) const;  // first coordinate of particle i
  double weight(std::size_t i) const { return weights_[i]; }
  bool equal_weighted() const { return equal_weighted_; }

  // Weighted mean, one entry per coordinate.
  const std::vector<double>& mean() const { return mean_; }
  double mean1() const { return mean_[0]; }

  // Weighted p-th absolute moment sum_i w_i |x_i|^p (Euclidean norm for
  // d > 1). p = 1 and p = 2 are precomputed.
  double abs_moment(double p) const;

  // Particle values in nondecreasing order with matching weights (d == 1).
  std::span<const double> sorted_values() const;
  std::span<const double> sorted_weights() const;

  // Left-continuous generalized inverse of the CDF (d == 1), u in [0, 1].
  double quantile(double u) const;

  // Equal-weight resampling at midpoint quantiles (d == 1).
  EmpiricalMeasure resample_equal(std::size_t n) const;

 private:
  void validate_and_cache();

  std::vector<double> points_;
  std::vector<double> weights_;
  int dim_ = 1;
  bool equal_weighted_ = false;
  std::vector<double> mean_;
  double abs_moment1_ = 0.0;
  double abs_moment2_ = 0.0;
  std::vector<double> sorted_values_;   // d == 1 only
  std::vector<double> sorted_weights_;  // d == 1 only
};

using MeasureFn =
    std::function<double(std::span<const double>, const EmpiricalMeasure&)>;

// Exact p-Wasserstein distance in one dimension via the sorted quantile
// coupling; sliced (random projection) approximation for d > 1.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double p);
double wasserstein_sliced(const EmpiricalMeasure& mu,
                          const EmpiricalMeasure& nu, double p,
                          int n_projections, std::uint64_t seed);

std::vector<double> mean(const EmpiricalMeasure& mu);
double moment(const EmpiricalMeasure& mu, double p);

// Signed-measure pairing integral(u(x, m1) - u(x, m2)) d(m1 - m2)(x),
// evaluated exactly on the union of the two particle sets. Nonnegative for
// every pair exactly when u is monotone in the Lasry-Lions sense.
double ll_monotonicity_gap(const MeasureFn& u, const EmpiricalMeasure& m1,
                           const EmpiricalMeasure& m2);

// Displacement interpolation between two one-dimensional clouds: matches
// quantiles and mixes them linearly with weight lambda on b.
EmpiricalMeasure quantile_mix(const EmpiricalMeasure& a,
                              const EmpiricalMeasure& b, double lambda);

// Measure-valued path on the uniform grid t_i = i * T / k, i = 0..k.
struct MeasureFlow {
  std::vector<double> times;
  std::vector<EmpiricalMeasure> measures;

  int periods() const { return static_cast<int>(measures.size()) - 1; }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  void validate() const;
};

// Piecewise-constant in time, left-continuous at the right endpoint: returns
// the measure at t_i for t in [t_i, t_{i+1}), and the final measure at t = T.
const EmpiricalMeasure& interpolate_flow(const MeasureFlow& flow, double t);

}  // namespace mfg
