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

#include "mfg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfg {

FeedbackPolicy::FeedbackPolicy(std::vector<Stage> stages,
                               std::vector<double> action_lo,
                               std::vector<double> action_hi)
    : stages_(std::move(stages)),
      action_lo_(std::move(action_lo)),
      action_hi_(std::move(action_hi)) {
  if (action_lo_.empty() || action_lo_.size() != action_hi_.size()) {
    throw std::invalid_argument("policy: bad action box");
  }
  for (std::size_t c = 0; c < action_lo_.size(); ++c) {
    if (action_lo_[c] > action_hi_[c]) {
      throw std::invalid_argument("policy: action box is empty");
    }
  }
}

FeedbackPolicy FeedbackPolicy::constant(int stages, double action, double lo,
                                        double hi) {
  std::vector<Stage> s;
  s.reserve(static_cast<std::size_t>(stages));
  for (int i = 0; i < stages; ++i) {
    s.emplace_back(LinearInterpolant({0.0}, {action}));
  }
  return FeedbackPolicy(std::move(s), {lo}, {hi});
}

double FeedbackPolicy::eval(int stage, double x) const {
  if (stage < 0 || stage >= stages()) {
    throw std::out_of_range("policy: stage out of range");
  }
  const auto* interp =
      std::get_if<LinearInterpolant>(&stages_[static_cast<std::size_t>(stage)]);
  if (interp == nullptr) {
    throw std::logic_error("policy: scalar eval on a table stage");
  }
  return std::clamp((*interp)(x), action_lo_[0], action_hi_[0]);
}

void FeedbackPolicy::eval(int stage, std::span<const double> x,
                          std::span<double> a) const {
  if (stage < 0 || stage >= stages()) {
    throw std::out_of_range("policy: stage out of range");
  }
  const Stage& s = stages_[static_cast<std::size_t>(stage)];
  if (const auto* interp = std::get_if<LinearInterpolant>(&s)) {
    a[0] = std::clamp((*interp)(x[0]), action_lo_[0], action_hi_[0]);
    return;
  }
  const Table& table = std::get<Table>(s);
  const int d = table.dim;
  const std::size_t n = table.states.size() / static_cast<std::size_t>(d);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double dist = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = table.states[i * d + c] - x[static_cast<std::size_t>(c)];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  for (int c = 0; c < d; ++c) {
    a[static_cast<std::size_t>(c)] =
        std::clamp(table.actions[best * d + c], action_lo_[static_cast<std::size_t>(c)],
                   action_hi_[static_cast<std::size_t>(c)]);
  }
}

}  // namespace mfg
