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

#include "mfg/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mfg/analytic.hpp"
#include "mfg/bsde.hpp"
#include "mfg/harness.hpp"
#include "mfg/io.hpp"
#include "mfg/parallel.hpp"
#include "mfg/pasting.hpp"
#include "mfg/version.hpp"

namespace mfg {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing and validation.

class SectionReader {
 public:
  SectionReader(const json* obj, std::string prefix,
                std::vector<ConfigIssue>* issues)
      : obj_(obj), prefix_(std::move(prefix)), issues_(issues) {}

  void number(const char* key, double* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_number()) {
      fail(key, "expected a number");
      return;
    }
    *out = v->get<double>();
  }

  void integer(const char* key, int* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) {
      fail(key, "expected an integer");
      return;
    }
    const std::int64_t raw = v->get<std::int64_t>();
    if (raw < -2147483647LL || raw > 2147483647LL) {
      fail(key, "out of range");
      return;
    }
    *out = static_cast<int>(raw);
  }

  void seed(const char* key, std::uint64_t* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (v->is_number_unsigned()) {
      *out = v->get<std::uint64_t>();
      return;
    }
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      *out = static_cast<std::uint64_t>(v->get<std::int64_t>());
      return;
    }
    fail(key, "expected a nonnegative integer");
  }

  void text(const char* key, std::string* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_string()) {
      fail(key, "expected a string");
      return;
    }
    *out = v->get<std::string>();
  }

  void number_or_null(const char* key, std::optional<double>* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (v->is_null()) {
      out->reset();
      return;
    }
    if (!v->is_number()) {
      fail(key, "expected a number or null");
      return;
    }
    *out = v->get<double>();
  }

  void int_array(const char* key, std::vector<int>* out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array()) {
      fail(key, "expected an array of integers");
      return;
    }
    std::vector<int> parsed;
    bool ok = true;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number_integer()) {
        issues_->push_back({prefix_ + "/" + key + "/" + std::to_string(i),
                            "expected an integer"});
        ok = false;
        continue;
      }
      parsed.push_back(static_cast<int>(e.get<std::int64_t>()));
    }
    if (ok) *out = std::move(parsed);
  }

  // Flags any key that is not in the allowlist.
  void finish(std::initializer_list<const char*> allowed) {
    if (obj_ == nullptr) return;
    for (const auto& item : obj_->items()) {
      bool known = false;
      for (const char* k : allowed) {
        if (item.key() == k) {
          known = true;
          break;
        }
      }
      if (!known) fail(item.key().c_str(), "unknown key");
    }
  }

 private:
  const json* find(const char* key) const {
    if (obj_ == nullptr) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }
  void fail(const char* key, const char* message) {
    issues_->push_back({prefix_ + "/" + key, message});
  }

  const json* obj_;
  std::string prefix_;
  std::vector<ConfigIssue>* issues_;
};

const json* section(const json& root, const char* key,
                    std::vector<ConfigIssue>* issues) {
  const auto it = root.find(key);
  if (it == root.end()) return nullptr;
  if (!it->is_object()) {
    issues->push_back({std::string("/") + key, "expected an object"});
    return nullptr;
  }
  return &*it;
}

bool finite(double v) { return std::isfinite(v); }

json config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = {{"family", c.family},
                  {"c", c.c},
                  {"c_l", c.c_l},
                  {"sigma", c.sigma},
                  {"xi_mean", c.xi_mean},
                  {"xi_std", c.xi_std},
                  {"horizon", c.horizon},
                  {"periods", c.periods},
                  {"action_lo", c.action_lo},
                  {"action_hi", c.action_hi},
                  {"noise", c.noise},
                  {"drift_scale", c.drift_scale}};
  j["solver"] = {{"method", c.method},
                 {"paths", c.paths},
                 {"seed", c.seed},
                 {"damping", c.damping},
                 {"tol", c.tol ? json(*c.tol) : json(nullptr)},
                 {"max_iters", c.max_iters},
                 {"basis_degree", c.basis_degree},
                 {"policy_knots", c.policy_knots},
                 {"threads", c.threads}};
  j["sweep"] = {{"ks", c.ks}, {"k_ref", c.k_ref}};
  j["output"] = {{"dir", c.out_dir}};
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << j.dump(2) << "\n";
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

json report_to_json(const EquilibriumReport& r) {
  return json{{"iterations", r.iterations},
              {"residual", r.residual},
              {"tolerance", r.tolerance},
              {"converged", r.converged},
              {"exploitability", r.exploitability},
              {"exploitability_stderr", r.exploitability_stderr},
              {"residual_history", r.residual_history}};
}

// ---------------------------------------------------------------------------
// Subcommands.

int run_solve_single(const RunConfig& config,
                     const std::filesystem::path& dir) {
  const MfgProblem problem = make_problem(config);
  const SolverOptions opts = make_solver_options(config);
  json report;
  int code = 0;
  try {
    const PathBundle bundle = sample_paths(problem, config.paths, config.seed);
    const SinglePeriodSolution sol =
        solve_single_period(problem, problem.terminal_cost, opts, bundle);
    write_measure_csv_file((dir / "measure.csv").string(), sol.measure);
    write_policy_csv_file((dir / "policy.csv").string(), sol.policy);
    report = report_to_json(sol.report);
    code = sol.report.converged ? 0 : 2;
  } catch (const std::exception& e) {
    report = json{{"converged", false}, {"error", e.what()}};
    std::fprintf(stderr, "solve-single failed: %s\n", e.what());
    code = 2;
  }
  report["command"] = "solve-single";
  write_json_file(dir / "report.json", report);
  return code;
}

int run_solve_multi(const RunConfig& config, const std::filesystem::path& dir) {
  const MfgProblem problem = make_problem(config);
  const SolverOptions opts = make_solver_options(config);
  json report;
  int code = 0;
  try {
    MultiPeriodSolution sol = config.method == "bsde"
                                  ? solve_mfg_bsde(problem, opts)
                                  : paste_equilibrium(problem, opts);
    write_flow_csv_file((dir / "flow.csv").string(), sol.flow);
    write_policy_csv_file((dir / "policy.csv").string(), sol.policy);
    report = report_to_json(sol.report);
    if (!sol.stage_reports.empty()) {
      json stages = json::array();
      for (const EquilibriumReport& r : sol.stage_reports) {
        stages.push_back(report_to_json(r));
      }
      report["stage_reports"] = std::move(stages);
    }
    code = sol.report.converged ? 0 : 2;
  } catch (const std::exception& e) {
    report = json{{"converged", false}, {"error", e.what()}};
    std::fprintf(stderr, "solve-multi failed: %s\n", e.what());
    code = 2;
  }
  report["command"] = "solve-multi";
  report["method"] = config.method;
  write_json_file(dir / "report.json", report);
  return code;
}

int run_sweep(const RunConfig& config, const std::filesystem::path& dir) {
  const MfgProblem problem = make_problem(config);
  const SolverOptions opts = make_solver_options(config);
  json report;
  int code = 0;
  try {
    const SweepResult res =
        donsker_sweep(problem, config.ks, config.k_ref, opts);
    write_sweep_csv_file((dir / "sweep.csv").string(), res);
    std::vector<int> converged(res.converged.begin(), res.converged.end());
    report = json{{"ks", res.ks},
                  {"k_ref", res.k_ref},
                  {"converged", converged},
                  {"iterations", res.iterations},
                  {"flow_gaps", res.flow_gaps},
                  {"control_gaps", res.control_gaps},
                  {"control_gap_stderr", res.control_gap_stderr},
                  {"state_gaps", res.state_gaps},
                  {"state_gap_stderr", res.state_gap_stderr},
                  {"control_slope", res.control_slope},
                  {"state_slope", res.state_slope},
                  {"flow_slope", res.flow_slope}};
    bool all = true;
    for (char f : res.converged) all = all && f != 0;
    all = all && std::isfinite(res.control_slope) &&
          std::isfinite(res.state_slope);
    code = all ? 0 : 2;
  } catch (const std::exception& e) {
    report = json{{"converged", false}, {"error", e.what()}};
    std::fprintf(stderr, "sweep failed: %s\n", e.what());
    code = 2;
  }
  report["command"] = "sweep";
  write_json_file(dir / "report.json", report);
  return code;
}

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

// Finite-difference slope of an affine feedback stage around the measure
// mean; exact for linear-quadratic stage policies away from the action box.
double policy_gain(const FeedbackPolicy& policy, int stage, double mean) {
  const double h = 1.0;
  return (policy.eval(stage, mean - h) - policy.eval(stage, mean + h)) /
         (2.0 * h);
}

int run_validate_lq(const RunConfig& config, const std::filesystem::path& dir) {
  std::vector<Check> checks;
  std::string error;
  try {
    LqParams params;
    params.control_cost = config.c;
    params.coupling_cost = config.c_l;
    params.noise_var = config.sigma * config.sigma;
    params.xi_mean = config.xi_mean;
    params.xi_var = config.xi_std * config.xi_std;

    {
      const LqStageValues rec = lq_g_recursion(params, 1);
      const LqSinglePeriod sp = lq_single_period(params);
      const double diff =
          std::fabs(rec.policy_coeff[0] - sp.policy_coeff) +
          std::fabs(rec.curvature[1] - 1.0) + std::fabs(rec.offset[0] -
                                                        params.noise_var);
      checks.push_back({"recursion_matches_single_period", diff <= 1e-12,
                        diff, 1e-12});
    }
    {
      const LqStageValues rec = lq_g_recursion(params, 2);
      const LqTwoPeriod two = lq_two_period(params);
      double diff = std::fabs(rec.policy_coeff[0] - two.stage1_coeff);
      diff = std::max(diff, std::fabs(rec.policy_coeff[1] - two.stage2_coeff));
      diff = std::max(diff, std::fabs(rec.curvature[1] - two.g1_curvature));
      diff = std::max(diff, std::fabs(rec.offset[1] - two.g1_offset));
      checks.push_back(
          {"recursion_matches_two_period", diff <= 1e-12, diff, 1e-12});
    }
    {
      const double pos = tanh_uniqueness_margin(3.0, 1.0);
      const double neg = tanh_uniqueness_margin(1.0, 1.0);
      checks.push_back({"saturating_drift_margin_sign", pos > 0.0 && neg < 0.0,
                        std::min(pos, -neg), 0.0});
    }
    {
      GrowthConstants gc;
      const double bound =
          a_priori_moment_bound(gc, 1.0, params.noise_var, 1.0,
                                params.noise_var, 1.0);
      checks.push_back({"moment_bound_finite_positive",
                        std::isfinite(bound) && bound > 0.0, bound, 0.0});
    }
    {
      // One-period numeric equilibrium against the closed-form law pushed
      // through the same scenario noise.
      LqConfig lc;
      lc.c = config.c;
      lc.c_l = config.c_l;
      lc.sigma = config.sigma;
      lc.xi_mean = config.xi_mean;
      lc.xi_std = config.xi_std;
      lc.horizon = 1.0;
      lc.periods = 1;
      const MfgProblem problem = make_lq_problem(lc);
      SolverOptions opts = make_solver_options(config);
      const PathBundle bundle =
          sample_paths(problem, config.paths, config.seed);
      const SinglePeriodSolution sol =
          solve_single_period(problem, problem.terminal_cost, opts, bundle);
      const LqSinglePeriod sp = lq_single_period(params);
      std::vector<double> oracle(static_cast<std::size_t>(bundle.n_paths));
      for (int i = 0; i < bundle.n_paths; ++i) {
        const double xi = bundle.initial1(i);
        oracle[static_cast<std::size_t>(i)] =
            xi + sp.policy_coeff * (sp.equilibrium_mean - xi) +
            config.sigma * bundle.increment1(i, 0);
      }
      const EmpiricalMeasure oracle_cloud =
          EmpiricalMeasure::equal(std::move(oracle));
      const double w2 = wasserstein(sol.measure, oracle_cloud, 2.0);
      const double tol =
          std::max(0.02, 0.02 * std::sqrt(100000.0 / config.paths));
      checks.push_back({"single_period_equilibrium_w2",
                        sol.report.converged && w2 < tol, w2, tol});
    }
    {
      // Two-period numeric stage gains against the quadratic recursion.
      LqConfig lc;
      lc.c = config.c;
      lc.c_l = config.c_l;
      lc.sigma = config.sigma;
      lc.xi_mean = config.xi_mean;
      lc.xi_std = config.xi_std;
      lc.horizon = 2.0;
      lc.periods = 2;
      const MfgProblem problem = make_lq_problem(lc);
      SolverOptions opts = make_solver_options(config);
      const MultiPeriodSolution sol = paste_equilibrium(problem, opts);
      const LqStageValues rec = lq_g_recursion(params, 2);
      double rel = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double mean = sol.flow.measures[static_cast<std::size_t>(i)].mean1();
        const double gain = policy_gain(sol.policy, i, mean);
        rel = std::max(rel, std::fabs(gain - rec.policy_coeff[static_cast<std::size_t>(i)]) /
                                rec.policy_coeff[static_cast<std::size_t>(i)]);
      }
      checks.push_back({"two_period_stage_gains",
                        sol.report.converged && rel < 0.05, rel, 0.05});
    }
  } catch (const std::exception& e) {
    error = e.what();
    std::fprintf(stderr, "validate-lq failed: %s\n", e.what());
  }

  bool all_pass = error.empty() && !checks.empty();
  json items = json::array();
  for (const Check& c : checks) {
    all_pass = all_pass && c.pass;
    items.push_back(json{{"name", c.name},
                         {"pass", c.pass},
                         {"value", c.value},
                         {"bound", c.bound}});
  }
  json report{{"command", "validate-lq"},
              {"all_pass", all_pass},
              {"checks", std::move(items)}};
  if (!error.empty()) report["error"] = error;
  write_json_file(dir / "report.json", report);
  return all_pass ? 0 : 2;
}

int run_bench(const RunConfig& config, const std::filesystem::path& dir) {
  using clock = std::chrono::steady_clock;
  json cases = json::array();
  bool all_converged = true;

  const auto record = [&](const std::string& name, int periods,
                          const EquilibriumReport& r, double ms) {
    std::fprintf(stderr, "bench %s: %.1f ms\n", name.c_str(), ms);
    cases.push_back(json{{"name", name},
                         {"paths", config.paths},
                         {"periods", periods},
                         {"iterations", r.iterations},
                         {"residual", r.residual},
                         {"converged", r.converged}});
    all_converged = all_converged && r.converged;
  };

  LqConfig lc;
  lc.c = config.c;
  lc.c_l = config.c_l;
  lc.sigma = config.sigma;
  lc.xi_mean = config.xi_mean;
  lc.xi_std = config.xi_std;
  const SolverOptions opts = make_solver_options(config);

  try {
    {
      lc.horizon = 1.0;
      lc.periods = 1;
      const MfgProblem problem = make_lq_problem(lc);
      const PathBundle bundle =
          sample_paths(problem, config.paths, config.seed);
      const auto t0 = clock::now();
      const SinglePeriodSolution sol =
          solve_single_period(problem, problem.terminal_cost, opts, bundle);
      const double ms = std::chrono::duration<double, std::milli>(
                            clock::now() - t0)
                            .count();
      record("single_period", 1, sol.report, ms);
    }
    {
      lc.horizon = 1.0;
      lc.periods = 2;
      const MfgProblem problem = make_lq_problem(lc);
      const auto t0 = clock::now();
      const MultiPeriodSolution sol = paste_equilibrium(problem, opts);
      const double ms = std::chrono::duration<double, std::milli>(
                            clock::now() - t0)
                            .count();
      record("pasting_two_period", 2, sol.report, ms);
    }
    {
      lc.horizon = 1.0;
      lc.periods = 4;
      const MfgProblem problem = make_lq_problem(lc);
      const auto t0 = clock::now();
      const MultiPeriodSolution sol = solve_mfg_bsde(problem, opts);
      const double ms = std::chrono::duration<double, std::milli>(
                            clock::now() - t0)
                            .count();
      record("backward_equation_four_period", 4, sol.report, ms);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench failed: %s\n", e.what());
    cases.push_back(json{{"name", "error"}, {"error", e.what()}});
    all_converged = false;
  }

  write_json_file(dir / "bench.json",
                  json{{"command", "bench"}, {"cases", std::move(cases)}});
  return all_converged ? 0 : 2;
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : issues_(std::move(issues)) {
  what_ = "invalid configuration";
  for (const ConfigIssue& issue : issues_) {
    what_ += "; " + issue.pointer + ": " + issue.message;
  }
}

RunConfig load_run_config(const std::string& json_text,
                          const std::string& command) {
  std::vector<ConfigIssue> issues;
  RunConfig cfg;
  cfg.command = command;

  static const char* kCommands[] = {"solve-single", "solve-multi", "sweep",
                                    "validate-lq", "bench"};
  bool known_command = false;
  for (const char* c : kCommands) known_command = known_command || command == c;
  if (!known_command) {
    throw ConfigError(std::vector<ConfigIssue>{{"", "unknown command: " + command}});
  }

  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"", std::string("invalid JSON: ") + e.what()}});
  }
  if (!root.is_object()) {
    throw ConfigError(std::vector<ConfigIssue>{{"", "config document must be a JSON object"}});
  }

  {
    SectionReader r(section(root, "problem", &issues), "/problem", &issues);
    r.text("family", &cfg.family);
    r.number("c", &cfg.c);
    r.number("c_l", &cfg.c_l);
    r.number("sigma", &cfg.sigma);
    r.number("xi_mean", &cfg.xi_mean);
    r.number("xi_std", &cfg.xi_std);
    r.number("horizon", &cfg.horizon);
    r.integer("periods", &cfg.periods);
    r.number("action_lo", &cfg.action_lo);
    r.number("action_hi", &cfg.action_hi);
    r.text("noise", &cfg.noise);
    r.number("drift_scale", &cfg.drift_scale);
    r.finish({"family", "c", "c_l", "sigma", "xi_mean", "xi_std", "horizon",
              "periods", "action_lo", "action_hi", "noise", "drift_scale"});
  }
  {
    SectionReader r(section(root, "solver", &issues), "/solver", &issues);
    r.text("method", &cfg.method);
    r.integer("paths", &cfg.paths);
    r.seed("seed", &cfg.seed);
    r.number("damping", &cfg.damping);
    r.number_or_null("tol", &cfg.tol);
    r.integer("max_iters", &cfg.max_iters);
    r.integer("basis_degree", &cfg.basis_degree);
    r.integer("policy_knots", &cfg.policy_knots);
    r.integer("threads", &cfg.threads);
    r.finish({"method", "paths", "seed", "damping", "tol", "max_iters",
              "basis_degree", "policy_knots", "threads"});
  }
  {
    SectionReader r(section(root, "sweep", &issues), "/sweep", &issues);
    r.int_array("ks", &cfg.ks);
    r.integer("k_ref", &cfg.k_ref);
    r.finish({"ks", "k_ref"});
  }
  {
    SectionReader r(section(root, "output", &issues), "/output", &issues);
    r.text("dir", &cfg.out_dir);
    r.finish({"dir"});
  }
  for (const auto& item : root.items()) {
    if (item.key() != "problem" && item.key() != "solver" &&
        item.key() != "sweep" && item.key() != "output") {
      issues.push_back({"/" + item.key(), "unknown key"});
    }
  }

  // Value ranges.
  if (cfg.family != "lq" && cfg.family != "tanh") {
    issues.push_back({"/problem/family", "must be one of: lq, tanh"});
  }
  if (!finite(cfg.c) || cfg.c <= 0.0) {
    issues.push_back({"/problem/c", "must be > 0"});
  }
  if (!finite(cfg.c_l) || cfg.c_l < 0.0) {
    issues.push_back({"/problem/c_l", "must be >= 0"});
  }
  if (!finite(cfg.sigma) || cfg.sigma <= 0.0) {
    issues.push_back({"/problem/sigma", "must be > 0"});
  }
  if (!finite(cfg.xi_mean)) {
    issues.push_back({"/problem/xi_mean", "must be finite"});
  }
  if (!finite(cfg.xi_std) || cfg.xi_std < 0.0) {
    issues.push_back({"/problem/xi_std", "must be >= 0"});
  }
  if (!finite(cfg.horizon) || cfg.horizon <= 0.0) {
    issues.push_back({"/problem/horizon", "must be > 0"});
  }
  if (cfg.periods < 1) {
    issues.push_back({"/problem/periods", "must be >= 1"});
  }
  if (!finite(cfg.action_lo) || !finite(cfg.action_hi) ||
      cfg.action_lo >= cfg.action_hi) {
    issues.push_back({"/problem/action_hi", "must be greater than action_lo"});
  }
  if (cfg.noise != "gaussian" && cfg.noise != "rademacher" &&
      cfg.noise != "zero") {
    issues.push_back(
        {"/problem/noise", "must be one of: gaussian, rademacher, zero"});
  }
  if (!finite(cfg.drift_scale)) {
    issues.push_back({"/problem/drift_scale", "must be finite"});
  }
  if (cfg.method != "pasting" && cfg.method != "bsde") {
    issues.push_back({"/solver/method", "must be one of: pasting, bsde"});
  }
  if (cfg.paths < 2) {
    issues.push_back({"/solver/paths", "must be >= 2"});
  }
  if (!finite(cfg.damping) || cfg.damping <= 0.0 || cfg.damping > 1.0) {
    issues.push_back({"/solver/damping", "must be in (0, 1]"});
  }
  if (cfg.tol && (!finite(*cfg.tol) || *cfg.tol <= 0.0)) {
    issues.push_back({"/solver/tol", "must be > 0"});
  }
  if (cfg.max_iters < 1) {
    issues.push_back({"/solver/max_iters", "must be >= 1"});
  }
  if (cfg.basis_degree < 1 || cfg.basis_degree > 6) {
    issues.push_back({"/solver/basis_degree", "must be in [1, 6]"});
  }
  if (cfg.policy_knots < 2) {
    issues.push_back({"/solver/policy_knots", "must be >= 2"});
  }
  if (cfg.threads < 0) {
    issues.push_back({"/solver/threads", "must be >= 0"});
  }
  if (cfg.ks.empty()) {
    issues.push_back({"/sweep/ks", "must be a nonempty array"});
  } else {
    bool increasing = cfg.ks.front() >= 1;
    for (std::size_t i = 1; i < cfg.ks.size(); ++i) {
      increasing = increasing && cfg.ks[i] > cfg.ks[i - 1];
    }
    if (!increasing) {
      issues.push_back(
          {"/sweep/ks", "entries must be >= 1 and strictly increasing"});
    }
  }
  if (cfg.k_ref < 1) {
    issues.push_back({"/sweep/k_ref", "must be >= 1"});
  }
  if (cfg.out_dir.empty()) {
    issues.push_back({"/output/dir", "must be a nonempty path"});
  }

  // Command-specific constraints.
  if (command == "solve-single" && cfg.periods != 1) {
    issues.push_back({"/problem/periods", "solve-single requires periods = 1"});
  }
  if ((command == "solve-multi" || command == "sweep") &&
      cfg.family == "tanh") {
    issues.push_back(
        {"/problem/family", "family tanh supports single-period solves only"});
  }
  if (command == "sweep" && !cfg.ks.empty() && cfg.k_ref >= 1) {
    bool divides = true;
    for (int k : cfg.ks) divides = divides && k >= 1 && cfg.k_ref % k == 0;
    if (!divides) {
      issues.push_back(
          {"/sweep/k_ref", "must be a multiple of every entry of ks"});
    } else if (cfg.k_ref < 8 * cfg.ks.back()) {
      issues.push_back({"/sweep/k_ref", "must be at least 8 * max(ks)"});
    }
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

std::string run_config_json(const RunConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

MfgProblem make_problem(const RunConfig& config) {
  const NoiseKind kind = config.noise == "rademacher" ? NoiseKind::rademacher
                         : config.noise == "zero"     ? NoiseKind::zero
                                                      : NoiseKind::gaussian;
  if (config.family == "tanh") {
    TanhConfig tc;
    tc.c = config.c;
    tc.drift_scale = config.drift_scale;
    tc.sigma = config.sigma;
    tc.xi_mean = config.xi_mean;
    tc.xi_std = config.xi_std;
    tc.horizon = config.horizon;
    tc.action_lo = config.action_lo;
    tc.action_hi = config.action_hi;
    tc.noise = kind;
    return make_tanh_problem(tc);
  }
  LqConfig lc;
  lc.c = config.c;
  lc.c_l = config.c_l;
  lc.sigma = config.sigma;
  lc.xi_mean = config.xi_mean;
  lc.xi_std = config.xi_std;
  lc.horizon = config.horizon;
  lc.periods = config.periods;
  lc.action_lo = config.action_lo;
  lc.action_hi = config.action_hi;
  lc.noise = kind;
  return make_lq_problem(lc);
}

SolverOptions make_solver_options(const RunConfig& config) {
  SolverOptions opts;
  opts.damping = config.damping;
  opts.max_iters = config.max_iters;
  opts.tol_fixed_point = config.tol;
  opts.seed = config.seed;
  opts.n_paths = config.paths;
  opts.basis_degree = config.basis_degree;
  opts.policy_knots = config.policy_knots;
  return opts;
}

int run(const RunConfig& config) {
  if (config.threads > 0) set_worker_count(config.threads);

  const std::filesystem::path dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError(std::vector<ConfigIssue>{
        {"/output/dir", "cannot create directory: " + ec.message()}});
  }

  write_json_file(dir / "manifest.json", json{{"version", kVersion},
                                              {"command", config.command},
                                              {"seed", config.seed},
                                              {"config", config_to_json(config)}});

  if (config.command == "solve-single") return run_solve_single(config, dir);
  if (config.command == "solve-multi") return run_solve_multi(config, dir);
  if (config.command == "sweep") return run_sweep(config, dir);
  if (config.command == "validate-lq") return run_validate_lq(config, dir);
  if (config.command == "bench") return run_bench(config, dir);
  throw ConfigError(std::vector<ConfigIssue>{{"", "unknown command: " + config.command}});
}

}  // namespace mfg
