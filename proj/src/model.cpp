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

#include "mfg/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mfg/parallel.hpp"

namespace mfg {

void MfgProblem::validate() const {
  if (dim <= 0) throw std::invalid_argument("problem: dim must be positive");
  if (horizon <= 0.0) throw std::invalid_argument("problem: horizon must be positive");
  if (periods <= 0) throw std::invalid_argument("problem: periods must be positive");
  if (sigma.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("problem: sigma must be dim x dim");
  }
  if (action_lo.size() != static_cast<std::size_t>(dim) ||
      action_hi.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("problem: action box must have dim entries");
  }
  for (int c = 0; c < dim; ++c) {
    if (action_lo[static_cast<std::size_t>(c)] > action_hi[static_cast<std::size_t>(c)]) {
      throw std::invalid_argument("problem: action box is empty");
    }
    if (action_lo[static_cast<std::size_t>(c)] > 0.0 ||
        action_hi[static_cast<std::size_t>(c)] < 0.0) {
      throw std::invalid_argument("problem: action box must contain 0");
    }
  }
  if (!running_cost) throw std::invalid_argument("problem: running cost required");
  if (!terminal_cost) throw std::invalid_argument("problem: terminal cost required");
}

std::span<const double> PathBundle::initial_at(int path) const {
  return std::span<const double>(initial).subspan(
      static_cast<std::size_t>(path) * dim, static_cast<std::size_t>(dim));
}

std::span<const double> PathBundle::increment_at(int path, int step) const {
  return std::span<const double>(increments)
      .subspan((static_cast<std::size_t>(path) * steps + step) * dim,
               static_cast<std::size_t>(dim));
}

EmpiricalMeasure PathBundle::initial_measure() const {
  return EmpiricalMeasure::equal(initial, dim);
}

PathBundle sample_paths(const MfgProblem& problem, int n_paths,
                        std::uint64_t seed) {
  problem.validate();
  if (!problem.initial_sampler) {
    throw std::invalid_argument("sample_paths: problem has no initial sampler");
  }
  if (n_paths <= 0) throw std::invalid_argument("sample_paths: need n_paths > 0");
  PathBundle bundle;
  bundle.n_paths = n_paths;
  bundle.steps = problem.periods;
  bundle.dim = problem.dim;
  bundle.dt = problem.dt();
  bundle.seed = seed;
  const std::size_t d = static_cast<std::size_t>(problem.dim);
  bundle.initial.resize(static_cast<std::size_t>(n_paths) * d);
  bundle.increments.resize(static_cast<std::size_t>(n_paths) *
                           static_cast<std::size_t>(bundle.steps) * d);
  const double root_dt = std::sqrt(bundle.dt);
  const NoiseKind kind = problem.noise.kind;
  parallel_blocks(static_cast<std::size_t>(n_paths),
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng init_rng = make_rng(seed, p, RngStream::kInitialState);
      problem.initial_sampler(
          init_rng, std::span<double>(bundle.initial).subspan(p * d, d));
      PathRng noise_rng = make_rng(seed, p, RngStream::kNoise);
      for (int i = 0; i < bundle.steps; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          double z = 0.0;
          switch (kind) {
            case NoiseKind::gaussian:
              z = root_dt * noise_rng.gaussian();
              break;
            case NoiseKind::rademacher:
              z = root_dt * noise_rng.sign();
              break;
            case NoiseKind::zero:
              z = 0.0;
              break;
          }
          bundle.increments[(p * static_cast<std::size_t>(bundle.steps) +
                             static_cast<std::size_t>(i)) * d + c] = z;
        }
      }
    }
  });
  return bundle;
}

PathBundle enumerate_rademacher_paths(const MfgProblem& problem) {
  problem.validate();
  if (problem.noise.kind != NoiseKind::rademacher) {
    throw std::invalid_argument("enumerate: requires rademacher noise");
  }
  if (problem.dim != 1) throw std::invalid_argument("enumerate: requires dim == 1");
  if (problem.periods > 20) throw std::invalid_argument("enumerate: k too large");
  if (!problem.initial_sampler) {
    throw std::invalid_argument("enumerate: problem has no initial sampler");
  }
  const int k = problem.periods;
  const int n = 1 << k;
  PathBundle bundle;
  bundle.n_paths = n;
  bundle.steps = k;
  bundle.dim = 1;
  bundle.dt = problem.dt();
  bundle.seed = 0;
  bundle.initial.resize(static_cast<std::size_t>(n));
  bundle.increments.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  const double root_dt = std::sqrt(bundle.dt);
  for (int p = 0; p < n; ++p) {
    PathRng init_rng = make_rng(0, static_cast<std::uint64_t>(p),
                                RngStream::kInitialState);
    double x0 = 0.0;
    problem.initial_sampler(init_rng, std::span<double>(&x0, 1));
    bundle.initial[static_cast<std::size_t>(p)] = x0;
    for (int i = 0; i < k; ++i) {
      const bool up = ((p >> i) & 1) != 0;
      bundle.increments[static_cast<std::size_t>(p) * k + i] =
          up ? root_dt : -root_dt;
    }
  }
  return bundle;
}

PathBundle coarsen_paths(const PathBundle& fine, int coarse_steps) {
  if (coarse_steps <= 0 || fine.steps % coarse_steps != 0) {
    throw std::invalid_argument("coarsen: coarse step count must divide fine");
  }
  const int ratio = fine.steps / coarse_steps;
  PathBundle out;
  out.n_paths = fine.n_paths;
  out.steps = coarse_steps;
  out.dim = fine.dim;
  out.dt = fine.dt * ratio;
  out.seed = fine.seed;
  out.initial = fine.initial;
  const std::size_t d = static_cast<std::size_t>(fine.dim);
  out.increments.assign(static_cast<std::size_t>(out.n_paths) *
                            static_cast<std::size_t>(coarse_steps) * d,
                        0.0);
  for (int p = 0; p < fine.n_paths; ++p) {
    for (int i = 0; i < coarse_steps; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (int j = 0; j < ratio; ++j) {
          s += fine.increments[(static_cast<std::size_t>(p) * fine.steps +
                                static_cast<std::size_t>(i * ratio + j)) * d + c];
        }
        out.increments[(static_cast<std::size_t>(p) * coarse_steps +
                        static_cast<std::size_t>(i)) * d + c] = s;
      }
    }
  }
  return out;
}

std::span<const double> Trajectories::at(int path, int step) const {
  return std::span<const double>(states).subspan(
      (static_cast<std::size_t>(path) * (steps + 1) + step) * dim,
      static_cast<std::size_t>(dim));
}

EmpiricalMeasure Trajectories::measure_at(int step) const {
  if (step < 0 || step > steps) throw std::out_of_range("trajectories: bad step");
  std::vector<double> pts(static_cast<std::size_t>(n_paths) * dim);
  for (int p = 0; p < n_paths; ++p) {
    const auto x = at(p, step);
    for (int c = 0; c < dim; ++c) {
      pts[static_cast<std::size_t>(p) * dim + c] = x[static_cast<std::size_t>(c)];
    }
  }
  return EmpiricalMeasure::equal(std::move(pts), dim);
}

Trajectories simulate_state(const MfgProblem& problem,
                            const FeedbackPolicy& policy,
                            const MeasureFlow& flow, const PathBundle& paths) {
  problem.validate();
  if (problem.drift_general) {
    throw std::invalid_argument(
        "simulate_state: multi-period simulation requires the separated "
        "drift a + b0(x, m)");
  }
  if (flow.periods() != paths.steps) {
    throw std::invalid_argument("simulate_state: flow/path step mismatch");
  }
  if (policy.stages() < paths.steps) {
    throw std::invalid_argument("simulate_state: policy has too few stages");
  }
  const int d = problem.dim;
  const int k = paths.steps;
  const double dt = paths.dt;
  Trajectories traj;
  traj.n_paths = paths.n_paths;
  traj.steps = k;
  traj.dim = d;
  traj.states.resize(static_cast<std::size_t>(paths.n_paths) *
                     static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(d));
  parallel_blocks(static_cast<std::size_t>(paths.n_paths),
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> a(static_cast<std::size_t>(d));
    std::vector<double> b0(static_cast<std::size_t>(d));
    for (std::size_t p = begin; p < end; ++p) {
      const auto x0 = paths.initial_at(static_cast<int>(p));
      std::copy(x0.begin(), x0.end(), x.begin());
      double* out = &traj.states[p * static_cast<std::size_t>(k + 1) *
                                 static_cast<std::size_t>(d)];
      std::copy(x.begin(), x.end(), out);
      for (int i = 0; i < k; ++i) {
        policy.eval(i, x, a);
        std::fill(b0.begin(), b0.end(), 0.0);
        if (problem.drift_b0) {
          problem.drift_b0(x, flow.measures[static_cast<std::size_t>(i)], b0);
        }
        const auto dz = paths.increment_at(static_cast<int>(p), i);
        for (int c = 0; c < d; ++c) {
          double noise = 0.0;
          for (int cc = 0; cc < d; ++cc) {
            noise += problem.sigma[static_cast<std::size_t>(c) * d + cc] *
                     dz[static_cast<std::size_t>(cc)];
          }
          x[static_cast<std::size_t>(c)] +=
              (a[static_cast<std::size_t>(c)] + b0[static_cast<std::size_t>(c)]) * dt +
              noise;
          if (!std::isfinite(x[static_cast<std::size_t>(c)])) {
            throw std::runtime_error("simulate_state: non-finite state");
          }
        }
        std::copy(x.begin(), x.end(), out + static_cast<std::size_t>(i + 1) * d);
      }
    }
  });
  return traj;
}

CostEstimate total_cost(const MfgProblem& problem, const FeedbackPolicy& policy,
                        const MeasureFlow& flow, const PathBundle& paths) {
  const Trajectories traj = simulate_state(problem, policy, flow, paths);
  const int d = problem.dim;
  const int k = paths.steps;
  const double dt = paths.dt;
  std::vector<double> cost(static_cast<std::size_t>(paths.n_paths));
  parallel_blocks(static_cast<std::size_t>(paths.n_paths),
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> a(static_cast<std::size_t>(d));
    for (std::size_t p = begin; p < end; ++p) {
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        const auto x = traj.at(static_cast<int>(p), i);
        policy.eval(i, x, a);
        double step_cost = problem.running_cost(x, a);
        if (problem.coupling_cost) {
          step_cost += problem.coupling_cost(x, flow.measures[static_cast<std::size_t>(i)]);
        }
        total += step_cost * dt;
      }
      total += problem.terminal_cost(traj.at(static_cast<int>(p), k),
                                     flow.measures[static_cast<std::size_t>(k)]);
      cost[p] = total;
    }
  });
  const MeanStderr ms = mean_and_stderr(cost);
  return CostEstimate{ms.mean, ms.stderr_mean};
}

InitialSampler gaussian_initial(double mean, double stddev) {
  if (stddev < 0.0) throw std::invalid_argument("initial: stddev must be >= 0");
  return [mean, stddev](PathRng& rng, std::span<double> out) {
    for (double& v : out) v = mean + stddev * rng.gaussian();
  };
}

InitialSampler point_initial(double x0) {
  return [x0](PathRng&, std::span<double> out) {
    for (double& v : out) v = x0;
  };
}

}  // namespace mfg
