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
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "mfg/families.hpp"
#include "mfg/single_period.hpp"

namespace mfg {

// One rejected configuration entry, addressed by its JSON pointer.
struct ConfigIssue {
  std::string pointer;  // e.g. "/problem/c"
  std::string message;
};

class ConfigError : public std::exception {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const char* what() const noexcept override { return what_.c_str(); }
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
  std::string what_;
};

// Fully resolved invocation: every knob has a concrete value, so a run is
// reproducible from the manifest echo alone.
struct RunConfig {
  std::string command;  // solve-single | solve-multi | sweep | validate-lq | bench

  // Problem section.
  std::string family = "lq";  // lq | tanh
  double c = 1.0;
  double c_l = 1.0;
  double sigma = 0.5;
  double xi_mean = 0.0;
  double xi_std = 1.0;
  double horizon = 1.0;
  int periods = 1;
  double action_lo = -50.0;
  double action_hi = 50.0;
  std::string noise = "gaussian";  // gaussian | rademacher | zero
  double drift_scale = 1.0;        // tanh family only

  // Solver section.
  std::string method = "pasting";  // solve-multi: pasting | bsde
  int paths = 10000;
  std::uint64_t seed = 0;
  double damping = 0.5;
  std::optional<double> tol;
  int max_iters = 200;
  int basis_degree = 3;
  int policy_knots = 129;
  int threads = 0;  // 0 keeps the ambient default

  // Sweep section.
  std::vector<int> ks = {2, 4, 8, 16, 32};
  int k_ref = 256;

  // Output section.
  std::string out_dir = ".";
};

// Parses a JSON document and resolves it against the defaults for the given
// command. Collects every schema violation (unknown key, wrong type, value
// out of range) and throws a single ConfigError listing them by JSON pointer.
RunConfig load_run_config(const std::string& json_text,
                          const std::string& command);

// Canonical JSON echo of a resolved config (the manifest payload).
std::string run_config_json(const RunConfig& config);

MfgProblem make_problem(const RunConfig& config);
SolverOptions make_solver_options(const RunConfig& config);

// Executes the configured command, writing manifest.json plus the command's
// artifacts into config.out_dir. Returns 0 when the run converged (or all
// checks passed) and 2 otherwise. Assumes the config was produced by
// load_run_config; internal solver failures are reported in report.json and
// yield 2, not an exception.
int run(const RunConfig& config);

}  // namespace mfg
