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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfg/runner.hpp"

namespace {

using nlohmann::json;

// Flag values staged before being merged over the config file document; a
// flag given on the command line always wins over the file.
struct FlagValues {
  std::string config_path;

  std::string family;
  double c = 0.0;
  double c_l = 0.0;
  double sigma = 0.0;
  double xi_mean = 0.0;
  double xi_std = 0.0;
  double horizon = 0.0;
  int periods = 0;
  double action_lo = 0.0;
  double action_hi = 0.0;
  std::string noise;
  double drift_scale = 0.0;

  std::string method;
  int paths = 0;
  std::uint64_t seed = 0;
  double damping = 0.0;
  double tol = 0.0;
  int max_iters = 0;
  int basis_degree = 0;
  int policy_knots = 0;
  int threads = 0;

  std::vector<int> ks;
  int k_ref = 0;

  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, FlagValues* v) {
  cmd->add_option("--config", v->config_path, "JSON config file");
  cmd->add_option("--family", v->family, "problem family (lq, tanh)");
  cmd->add_option("--c", v->c, "control cost coefficient");
  cmd->add_option("--cl", v->c_l, "coupling cost coefficient");
  cmd->add_option("--sigma", v->sigma, "volatility");
  cmd->add_option("--xi-mean", v->xi_mean, "initial state mean");
  cmd->add_option("--xi-std", v->xi_std, "initial state standard deviation");
  cmd->add_option("--horizon", v->horizon, "time horizon");
  cmd->add_option("--action-lo", v->action_lo, "action box lower bound");
  cmd->add_option("--action-hi", v->action_hi, "action box upper bound");
  cmd->add_option("--noise", v->noise,
                  "noise kind (gaussian, rademacher, zero)");
  cmd->add_option("--drift-scale", v->drift_scale, "drift scale (tanh family)");
  cmd->add_option("--paths", v->paths, "scenario path count");
  cmd->add_option("--seed", v->seed, "random seed");
  cmd->add_option("--damping", v->damping, "fixed-point damping in (0, 1]");
  cmd->add_option("--tol", v->tol, "fixed-point tolerance");
  cmd->add_option("--max-iters", v->max_iters, "fixed-point iteration cap");
  cmd->add_option("--basis-degree", v->basis_degree,
                  "regression basis polynomial degree");
  cmd->add_option("--knots", v->policy_knots, "policy interpolation knots");
  cmd->add_option("--threads", v->threads, "worker threads (0 = default)");
  cmd->add_option("--out", v->out_dir, "output directory");
}

bool flag_given(const CLI::App& cmd, const char* flag) {
  const CLI::Option* opt = cmd.get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

// Copies every flag the user actually passed into the config document.
void apply_overrides(const CLI::App& cmd, const FlagValues& v, json* root) {
  const auto set = [&](const char* flag, const char* sec, const char* key,
                       json value) {
    if (flag_given(cmd, flag)) (*root)[sec][key] = std::move(value);
  };
  set("--family", "problem", "family", v.family);
  set("--c", "problem", "c", v.c);
  set("--cl", "problem", "c_l", v.c_l);
  set("--sigma", "problem", "sigma", v.sigma);
  set("--xi-mean", "problem", "xi_mean", v.xi_mean);
  set("--xi-std", "problem", "xi_std", v.xi_std);
  set("--horizon", "problem", "horizon", v.horizon);
  set("--periods", "problem", "periods", v.periods);
  set("--action-lo", "problem", "action_lo", v.action_lo);
  set("--action-hi", "problem", "action_hi", v.action_hi);
  set("--noise", "problem", "noise", v.noise);
  set("--drift-scale", "problem", "drift_scale", v.drift_scale);
  set("--method", "solver", "method", v.method);
  set("--paths", "solver", "paths", v.paths);
  set("--seed", "solver", "seed", v.seed);
  set("--damping", "solver", "damping", v.damping);
  set("--tol", "solver", "tol", v.tol);
  set("--max-iters", "solver", "max_iters", v.max_iters);
  set("--basis-degree", "solver", "basis_degree", v.basis_degree);
  set("--knots", "solver", "policy_knots", v.policy_knots);
  set("--threads", "solver", "threads", v.threads);
  set("--ks", "sweep", "ks", v.ks);
  set("--kref", "sweep", "k_ref", v.k_ref);
  set("--out", "output", "dir", v.out_dir);
}

int run_command(const std::string& name, const CLI::App& cmd,
                const FlagValues& v) {
  json root = json::object();
  if (!v.config_path.empty()) {
    std::ifstream is(v.config_path, std::ios::binary);
    if (!is) {
      std::fprintf(stderr, "config error at : cannot open config file %s\n",
                   v.config_path.c_str());
      return 1;
    }
    std::ostringstream buffer;
    buffer << is.rdbuf();
    try {
      root = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      std::fprintf(stderr, "config error at : %s\n", e.what());
      return 1;
    }
    if (!root.is_object()) {
      std::fprintf(stderr,
                   "config error at : config document must be a JSON object\n");
      return 1;
    }
  }
  apply_overrides(cmd, v, &root);

  try {
    const mfg::RunConfig config = mfg::load_run_config(root.dump(), name);
    return mfg::run(config);
  } catch (const mfg::ConfigError& e) {
    for (const mfg::ConfigIssue& issue : e.issues()) {
      std::fprintf(stderr, "config error at %s: %s\n", issue.pointer.c_str(),
                   issue.message.c_str());
    }
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time mean field game solver"};
  app.require_subcommand(1);

  FlagValues vs, vm, vw, vl, vb;

  CLI::App* solve_single =
      app.add_subcommand("solve-single", "One-period equilibrium fixed point");
  add_common_flags(solve_single, &vs);
  solve_single->add_option("--periods", vs.periods, "period count");

  CLI::App* solve_multi =
      app.add_subcommand("solve-multi", "Multi-period equilibrium");
  add_common_flags(solve_multi, &vm);
  solve_multi->add_option("--k,--periods", vm.periods, "period count");
  solve_multi->add_option("--method", vm.method,
                          "equilibrium construction (pasting, bsde)");

  CLI::App* sweep =
      app.add_subcommand("sweep", "Time-refinement convergence study");
  add_common_flags(sweep, &vw);
  sweep->add_option("--ks", vw.ks, "comma-separated period counts")
      ->delimiter(',');
  sweep->add_option("--kref", vw.k_ref, "reference period count");

  CLI::App* validate =
      app.add_subcommand("validate-lq", "Closed-form oracle suite");
  add_common_flags(validate, &vl);

  CLI::App* bench =
      app.add_subcommand("bench", "Deterministic benchmark suite");
  add_common_flags(bench, &vb);

  CLI11_PARSE(app, argc, argv);

  if (solve_single->parsed()) return run_command("solve-single", *solve_single, vs);
  if (solve_multi->parsed()) return run_command("solve-multi", *solve_multi, vm);
  if (sweep->parsed()) return run_command("sweep", *sweep, vw);
  if (validate->parsed()) return run_command("validate-lq", *validate, vl);
  if (bench->parsed()) return run_command("bench", *bench, vb);
  return 1;
}
