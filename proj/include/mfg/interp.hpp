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

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfg {

// Piecewise-linear interpolant on sorted knots with constant extrapolation
// outside the knot range. Evaluation is deterministic and allocation free.
class LinearInterpolant {
 public:
  LinearInterpolant() = default;

  LinearInterpolant(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.empty() || xs_.size() != ys_.size()) {
      throw std::invalid_argument("interpolant needs equal, nonempty knots");
    }
    if (!std::is_sorted(xs_.begin(), xs_.end())) {
      throw std::invalid_argument("interpolant knots must be sorted");
    }
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs_.begin());
    const double x0 = xs_[j - 1], x1 = xs_[j];
    if (x1 == x0) return ys_[j];
    const double t = (x - x0) / (x1 - x0);
    return ys_[j - 1] + t * (ys_[j] - ys_[j - 1]);
  }

  std::span<const double> knots_x() const { return xs_; }
  std::span<const double> knots_y() const { return ys_; }
  bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

}  // namespace mfg
