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

#include "mfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {
namespace {

constexpr double kWeightSumTol = 1e-12;

double abs_pow(double d, double p) {
  const double a = std::fabs(d);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

// W_p^p between two sorted weighted samples via the merged quantile sweep.
double quantile_coupling_cost(std::span<const double> xs,
                              std::span<const double> xw,
                              std::span<const double> ys,
                              std::span<const double> yw, double p) {
  std::size_t i = 0, j = 0;
  double wa = xw[0];
  double wb = yw[0];
  double acc = 0.0;
  while (true) {
    const double take = std::min(wa, wb);
    if (take > 0.0) acc += take * abs_pow(xs[i] - ys[j], p);
    wa -= take;
    wb -= take;
    if (wa <= 0.0) {
      if (++i >= xs.size()) break;
      wa = xw[i];
    }
    if (wb <= 0.0) {
      if (++j >= ys.size()) break;
      wb = yw[j];
    }
  }
  return acc;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points,
                                   std::vector<double> weights, int dim)
    : points_(std::move(points)), weights_(std::move(weights)), dim_(dim) {
  validate_and_cache();
}

EmpiricalMeasure EmpiricalMeasure::equal(std::vector<double> points, int dim) {
  if (dim <= 0 || points.empty() || points.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("measure: bad point array for given dim");
  }
  const std::size_t n = points.size() / static_cast<std::size_t>(dim);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return EmpiricalMeasure(std::move(points), std::move(w), dim);
}

void EmpiricalMeasure::validate_and_cache() {
  if (dim_ <= 0) throw std::invalid_argument("measure: dim must be positive");
  if (weights_.empty()) throw std::invalid_argument("measure: empty support");
  if (points_.size() != weights_.size() * static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("measure: points/weights size mismatch");
  }
  for (double x : points_) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("measure: non-finite coordinate");
    }
  }
  double wmin = weights_[0], wmax = weights_[0];
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("measure: weights must be nonnegative");
    }
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  const double total = pairwise_sum(weights_);
  if (std::fabs(total - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("measure: weights must sum to one");
  }
  equal_weighted_ = (wmax - wmin) <= 1e-15;

  const std::size_t n = weights_.size();
  mean_.assign(static_cast<std::size_t>(dim_), 0.0);
  std::vector<double> scratch(n);
  for (int c = 0; c < dim_; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      scratch[i] = weights_[i] * points_[i * dim_ + c];
    }
    mean_[static_cast<std::size_t>(c)] = pairwise_sum(scratch);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double x = points_[i * dim_ + c];
      norm2 += x * x;
    }
    scratch[i] = weights_[i] * std::sqrt(norm2);
  }
  abs_moment1_ = pairwise_sum(scratch);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double x = points_[i * dim_ + c];
      norm2 += x * x;
    }
    scratch[i] = weights_[i] * norm2;
  }
  abs_moment2_ = pairwise_sum(scratch);

  if (dim_ == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return points_[a] < points_[b];
    });
    sorted_values_.resize(n);
    sorted_weights_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sorted_values_[i] = points_[order[i]];
      sorted_weights_[i] = weights_[order[i]];
    }
  }
}

std::span<const double> EmpiricalMeasure::point(std::size_t i) const {
  return std::span<const double>(points_).subspan(i * static_cast<std::size_t>(dim_),
                                                  static_cast<std::size_t>(dim_));
}

double EmpiricalMeasure::value(std::size_t i) const {
  return points_[i * static_cast<std::size_t>(dim_)];
}

double EmpiricalMeasure::abs_moment(double p) const {
  if (p < 0.0) throw std::invalid_argument("measure: moment order must be >= 0");
  if (p == 1.0) return abs_moment1_;
  if (p == 2.0) return abs_moment2_;
  const std::size_t n = size();
  std::vector<double> scratch(n);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int c = 0; c < dim_; ++c) {
      const double x = points_[i * dim_ + c];
      norm2 += x * x;
    }
    scratch[i] = weights_[i] * std::pow(norm2, p / 2.0);
  }
  return pairwise_sum(scratch);
}

std::span<const double> EmpiricalMeasure::sorted_values() const {
  if (dim_ != 1) throw std::logic_error("sorted_values: requires dim == 1");
  return sorted_values_;
}

std::span<const double> EmpiricalMeasure::sorted_weights() const {
  if (dim_ != 1) throw std::logic_error("sorted_weights: requires dim == 1");
  return sorted_weights_;
}

double EmpiricalMeasure::quantile(double u) const {
  if (dim_ != 1) throw std::logic_error("quantile: requires dim == 1");
  if (u < 0.0 || u > 1.0) throw std::invalid_argument("quantile: u outside [0, 1]");
  double cum = 0.0;
  for (std::size_t i = 0; i < sorted_values_.size(); ++i) {
    cum += sorted_weights_[i];
    if (cum >= u) return sorted_values_[i];
  }
  return sorted_values_.back();
}

EmpiricalMeasure EmpiricalMeasure::resample_equal(std::size_t n) const {
  if (dim_ != 1) throw std::logic_error("resample_equal: requires dim == 1");
  if (n == 0) throw std::invalid_argument("resample_equal: n must be positive");
  std::vector<double> pts(n);
  std::size_t j = 0;
  double cum = sorted_weights_[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    while (cum < u && j + 1 < sorted_values_.size()) {
      ++j;
      cum += sorted_weights_[j];
    }
    pts[i] = sorted_values_[j];
  }
  return EmpiricalMeasure::equal(std::move(pts), 1);
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   double p) {
  if (p < 1.0) throw std::invalid_argument("wasserstein: p must be >= 1");
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument("wasserstein: dimension mismatch");
  }
  if (mu.dim() != 1) {
    return wasserstein_sliced(mu, nu, p, 64, 0x517ced5eedull);
  }
  const double cost = quantile_coupling_cost(mu.sorted_values(), mu.sorted_weights(),
                                             nu.sorted_values(), nu.sorted_weights(), p);
  return std::pow(cost, 1.0 / p);
}

double wasserstein_sliced(const EmpiricalMeasure& mu,
                          const EmpiricalMeasure& nu, double p,
                          int n_projections, std::uint64_t seed) {
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument("wasserstein: dimension mismatch");
  }
  const int d = mu.dim();
  if (d == 1) return wasserstein(mu, nu, p);
  if (n_projections <= 0) {
    throw std::invalid_argument("wasserstein: projection count must be positive");
  }
  double acc = 0.0;
  std::vector<double> dir(static_cast<std::size_t>(d));
  std::vector<double> px(mu.size()), py(nu.size());
  std::vector<double> wx(mu.weights().begin(), mu.weights().end());
  std::vector<double> wy(nu.weights().begin(), nu.weights().end());
  for (int k = 0; k < n_projections; ++k) {
    PathRng rng = make_rng(seed, static_cast<std::uint64_t>(k),
                           RngStream::kSlicedDirections);
    double norm2 = 0.0;
    for (int c = 0; c < d; ++c) {
      dir[static_cast<std::size_t>(c)] = rng.gaussian();
      norm2 += dir[static_cast<std::size_t>(c)] * dir[static_cast<std::size_t>(c)];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto pt = mu.point(i);
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += pt[static_cast<std::size_t>(c)] * dir[static_cast<std::size_t>(c)];
      px[i] = s * inv;
    }
    for (std::size_t i = 0; i < nu.size(); ++i) {
      const auto pt = nu.point(i);
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += pt[static_cast<std::size_t>(c)] * dir[static_cast<std::size_t>(c)];
      py[i] = s * inv;
    }
    // Sort projections together with their weights.
    std::vector<std::size_t> ox(px.size()), oy(py.size());
    std::iota(ox.begin(), ox.end(), 0);
    std::iota(oy.begin(), oy.end(), 0);
    std::stable_sort(ox.begin(), ox.end(), [&](std::size_t a, std::size_t b) { return px[a] < px[b]; });
    std::stable_sort(oy.begin(), oy.end(), [&](std::size_t a, std::size_t b) { return py[a] < py[b]; });
    std::vector<double> sx(px.size()), swx(px.size()), sy(py.size()), swy(py.size());
    for (std::size_t i = 0; i < px.size(); ++i) { sx[i] = px[ox[i]]; swx[i] = wx[ox[i]]; }
    for (std::size_t i = 0; i < py.size(); ++i) { sy[i] = py[oy[i]]; swy[i] = wy[oy[i]]; }
    acc += quantile_coupling_cost(sx, swx, sy, swy, p);
  }
  return std::pow(acc / n_projections, 1.0 / p);
}

std::vector<double> mean(const EmpiricalMeasure& mu) { return mu.mean(); }

double moment(const EmpiricalMeasure& mu, double p) { return mu.abs_moment(p); }

double ll_monotonicity_gap(const MeasureFn& u, const EmpiricalMeasure& m1,
                           const EmpiricalMeasure& m2) {
  if (m1.dim() != m2.dim()) {
    throw std::invalid_argument("monotonicity gap: dimension mismatch");
  }
  auto delta_u = [&](std::span<const double> x) {
    return u(x, m1) - u(x, m2);
  };
  std::vector<double> terms;
  terms.reserve(m1.size() + m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    terms.push_back(m1.weight(i) * delta_u(m1.point(i)));
  }
  for (std::size_t i = 0; i < m2.size(); ++i) {
    terms.push_back(-m2.weight(i) * delta_u(m2.point(i)));
  }
  return pairwise_sum(terms);
}

EmpiricalMeasure quantile_mix(const EmpiricalMeasure& a,
                              const EmpiricalMeasure& b, double lambda) {
  if (a.dim() != 1 || b.dim() != 1) {
    throw std::invalid_argument("quantile_mix: requires dim == 1");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("quantile_mix: lambda outside [0, 1]");
  }
  if (a.equal_weighted() && b.equal_weighted() && a.size() == b.size()) {
    const auto va = a.sorted_values();
    const auto vb = b.sorted_values();
    std::vector<double> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
      out[i] = (1.0 - lambda) * va[i] + lambda * vb[i];
    }
    return EmpiricalMeasure::equal(std::move(out), 1);
  }
  const std::size_t n = std::max(a.size(), b.size());
  const EmpiricalMeasure ra = a.resample_equal(n);
  const EmpiricalMeasure rb = b.resample_equal(n);
  return quantile_mix(ra, rb, lambda);
}

void MeasureFlow::validate() const {
  if (times.size() != measures.size() || times.empty()) {
    throw std::invalid_argument("flow: times/measures size mismatch");
  }
  if (times.size() == 1) return;
  const double dt = times[1] - times[0];
  if (dt <= 0.0) throw std::invalid_argument("flow: times must increase");
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (std::fabs(step - dt) > 1e-9 * std::max(1.0, std::fabs(times.back()))) {
      throw std::invalid_argument("flow: grid must be uniform");
    }
  }
}

const EmpiricalMeasure& interpolate_flow(const MeasureFlow& flow, double t) {
  if (flow.measures.empty()) throw std::invalid_argument("flow: empty");
  const double t0 = flow.times.front();
  const double T = flow.times.back();
  if (t < t0 || t > T) {
    throw std::invalid_argument("flow: time outside [0, T]");
  }
  if (t >= T) return flow.measures.back();
  const auto it = std::upper_bound(flow.times.begin(), flow.times.end(), t);
  const std::size_t idx = static_cast<std::size_t>(it - flow.times.begin());
  return flow.measures[idx - 1];
}

}  // namespace mfg
