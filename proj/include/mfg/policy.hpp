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

#include <span>
#include <variant>
#include <vector>

#include "mfg/interp.hpp"

namespace mfg {

// Deterministic feedback control: one state-to-action map per period. In one
// dimension each stage is a sorted-knot piecewise-linear interpolant with
// constant extrapolation; in higher dimensions a nearest-neighbor table.
// Evaluations are always clamped to the action box.
class FeedbackPolicy {
 public:
  struct Table {
    int dim = 1;
    std::vector<double> states;   // row-major n x dim
    std::vector<double> actions;  // row-major n x dim
  };
  using Stage = std::variant<LinearInterpolant, Table>;

  FeedbackPolicy() = default;
  FeedbackPolicy(std::vector<Stage> stages, std::vector<double> action_lo,
                 std::vector<double> action_hi);

  // Constant-action policy (1-D).
  static FeedbackPolicy constant(int stages, double action, double lo,
                                 double hi);

  int stages() const { return static_cast<int>(stages_.size()); }
  int dim() const { return static_cast<int>(action_lo_.size()); }

  double eval(int stage, double x) const;
  void eval(int stage, std::span<const double> x, std::span<double> a) const;

  std::span<const double> action_lo() const { return action_lo_; }
  std::span<const double> action_hi() const { return action_hi_; }
  const Stage& stage(int i) const { return stages_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<Stage> stages_;
  std::vector<double> action_lo_;
  std::vector<double> action_hi_;
};

}  // namespace mfg
