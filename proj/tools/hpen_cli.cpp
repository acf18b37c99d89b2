// hpen: instance generation, parameter selection, solvers and the canned
// regression experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpen/experiments.hpp"
#include "hpen/geometry.hpp"
#include "hpen/io.hpp"
#include "hpen/params.hpp"
#include "hpen/solvers.hpp"
#include "hpen/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hpen;

namespace {

std::string default_out_root() {
  const char* env = std::getenv("HPEN_OUT_DIR");
  return env && *env ? env : "out";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string> kFlagKeys = {"timing", "no-reference"};

// Appends `--key value` for every key = value line whose key is not already on
// the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (path.empty()) return kept;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  auto present = [&](const std::string& key) {
    for (const auto& a : kept)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || present(key)) continue;
    if (kFlagKeys.count(key)) {
      if (value == "true" || value == "1") kept.push_back("--" + key);
      continue;
    }
    kept.push_back("--" + key);
    kept.push_back(value);
  }
  return kept;
}

json constants_json(const ProblemConstants& k) {
  return {{"alpha_min", k.alpha_min}, {"alpha_max", k.alpha_max}, {"beta_hat", k.beta_hat}, {"L_hat", k.L_hat},
          {"epsilon", k.epsilon},     {"mu_f", k.mu_f},           {"L_f", k.L_f},           {"c", k.c}};
}

struct GenerateArgs {
  long n = 30, l = 30;
  long m = 0;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_generate(const GenerateArgs& a) {
  const auto inst = generate_regression_instance(a.n, a.l, static_cast<std::size_t>(a.m), a.seed);
  write_instance(a.output, inst.obj, inst.poly);
  json out = {{"file", a.output},
              {"sha1", git_blob_sha1(instance_to_json(inst.obj, inst.poly))},
              {"alpha_min", inst.poly.alpha_min()},
              {"alpha_max", inst.poly.alpha_max()},
              {"slater_margin_at_origin", inst.slater.margin}};
  std::cout << out.dump(1) << "\n";
  return 0;
}

struct ParamsArgs {
  std::string instance;
  double delta0 = 1e-2;
  std::string mode = "strong";
  std::optional<double> beta, grad_bound, slater_eps, c_budget, hoffman_radius;
  std::size_t hoffman_samples = 200;
  std::uint64_t seed = 0;
};

int cmd_params(const ParamsArgs& a) {
  const ProblemInstance inst = read_instance(a.instance);
  const Vec origin = Vec::Zero(inst.obj.dim());
  SlaterCertificate slater{origin, slater_margin(inst.poly, origin)};
  if (!a.slater_eps && !(slater.margin > 0.0))
    throw std::invalid_argument("origin is not strictly feasible; supply --slater-eps with a certified point");
  const auto curv = *inst.obj.curvature();

  ProblemConstants pre;
  pre.alpha_min = inst.poly.alpha_min();
  pre.mu_f = curv.mu_f;
  double budget = 0.0;
  if (a.mode == "strong") {
    if (!(curv.mu_f > 0.0)) throw std::invalid_argument("strong mode needs mu_f > 0");
    budget = strong_budget(pre, a.delta0);
  } else if (a.mode == "gap") {
    budget = gap_budget(pre, a.delta0);
  } else {
    budget = 1.0;
  }
  ConstantOverrides ov{a.beta, a.grad_bound, a.slater_eps, a.c_budget};
  const ConstantsReport rep =
      compute_constants(inst.obj, inst.poly, slater, budget, ov, a.seed, a.hoffman_samples, a.hoffman_radius);
  const ProblemConstants& k = rep.consts;
  const std::size_t m = inst.poly.m();

  PenaltyParams pp;
  if (a.mode == "strong") {
    pp = params_for_accuracy_strong(k, m, a.delta0);
    budget = strong_budget(k, a.delta0);
  } else if (a.mode == "gap") {
    pp = params_for_accuracy_gap(k, m, a.delta0);
    budget = gap_budget(k, a.delta0);
  } else {
    pp = params_for_feasibility(k, m);
    budget = k.c;
  }
  check_penalty_params(k, m, pp, budget);
  const double big_gamma = gamma_threshold(k, m, pp.delta);

  json out = {{"mode", a.mode},
              {"delta0", a.delta0},
              {"gamma", pp.gamma},
              {"delta", pp.delta},
              {"Gamma", big_gamma},
              {"gamma_delta_budget", budget},
              {"delta_max", delta_range_feasibility(k, m, budget)},
              {"saga_step", saga_step_size(k, m, pp, k.mu_f > 0.0)},
              {"level_value_at_slater_point", level_value(inst.obj, inst.poly, k, slater.point, pp)},
              {"beta_source", a.beta ? "override" : "estimate"},
              {"grad_bound_source", a.grad_bound ? "override" : "estimate"},
              {"constants", constants_json(k)},
              {"checks",
               {{"Gamma<=gamma", big_gamma <= pp.gamma * (1.0 + 1e-12)},
                {"gamma*delta<=budget", pp.gamma * pp.delta <= budget * (1.0 + 1e-12)},
                {"delta<epsilon", pp.delta < k.epsilon},
                {"delta<16alpha^2/(beta m)^2", pp.delta < delta_upper_limit(k, m)}}}};
  if (!a.beta) out["hoffman_infeasible_samples"] = rep.hoffman.infeasible_samples;
  if (rep.grad_bound) out["grad_bound_radius"] = rep.grad_bound->radius;
  std::cout << out.dump(1) << "\n";
  return 0;
}

struct SolveArgs {
  std::string instance;
  std::string method = "fullgrad";
  std::optional<double> gamma, delta, step;
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  double tol = 0.0;
  double eps_exp = 0.25, b_exp = 1.6;
  std::string out = default_out_root();
  std::string name = "solve";
  bool timing = false;
  bool no_reference = false;
};

int cmd_solve(const SolveArgs& a) {
  const std::string text = read_file(a.instance);
  const ProblemInstance inst = instance_from_json(text);
  const Method method = parse_method(a.method);
  const std::size_t m = inst.poly.m();
  const double md = static_cast<double>(m);
  const auto curv = *inst.obj.curvature();
  const Vec start = Vec::Zero(inst.obj.dim());

  std::optional<Vec> x_ref;
  if (!a.no_reference || method == Method::Reference) x_ref = solve_reference(inst.obj, inst.poly, start);

  PenaltyParams pp{a.gamma.value_or(100.0 * md * md), a.delta.value_or(1e-3)};
  ProblemConstants k;
  k.mu_f = curv.mu_f;
  k.L_f = curv.L_f;
  k.alpha_min = inst.poly.alpha_min();
  k.alpha_max = inst.poly.alpha_max();
  double step = 0.0;
  std::string step_source = a.step ? "flag" : "default";
  if (a.step) step = *a.step;
  else if (method == Method::SAGA) step = saga_step_size(k, m, pp, curv.mu_f > 0.0);
  else if (method == Method::FullGrad) step = 1.0 / (curv.L_f + pp.gamma * k.alpha_max / (2.0 * pp.delta));

  TraceOptions opts{a.record_every, x_ref, a.timing};
  const fs::path dir = fs::path(a.out) / a.name / std::to_string(a.seed);
  json side = {{"method", a.method},
               {"instance", a.instance},
               {"instance_sha1", git_blob_sha1(text)},
               {"seed", a.seed},
               {"iterations", a.iters},
               {"record_every", a.record_every},
               {"constants", {{"mu_f", k.mu_f}, {"L_f", k.L_f}, {"alpha_min", k.alpha_min}, {"alpha_max", k.alpha_max}}}};
  if (method == Method::FullGrad || method == Method::SAGA) {
    side["gamma"] = pp.gamma;
    side["delta"] = pp.delta;
    side["step"] = step;
    side["step_source"] = step_source;
  }
  if (method == Method::FullGrad) side["tol"] = a.tol;
  if (method == Method::TimeVarying) side["schedule"] = {{"eps", a.eps_exp}, {"b", a.b_exp}};

  SolveResult res;
  int code = 0;
  try {
    switch (method) {
      case Method::FullGrad:
        res = solve_full_gradient(inst.obj, inst.poly, pp, start, step, a.iters, a.tol, opts);
        break;
      case Method::SAGA:
        res = solve_saga(inst.obj, inst.poly, pp, start, step, a.iters, a.seed, opts);
        break;
      case Method::TimeVarying:
        res = solve_time_varying(inst.obj, inst.poly, make_schedule(a.eps_exp, a.b_exp), start, a.iters, opts);
        break;
      case Method::RandProj:
        res = solve_rand_proj(inst.obj, inst.poly, start, a.iters, a.seed, opts);
        break;
      case Method::Reference:
        res.x = *x_ref;
        break;
    }
  } catch (const DivergenceError& e) {
    write_file(dir / (a.method + ".csv"), e.trace().to_csv());
    side["diverged_at"] = e.iteration();
    side["error"] = e.what();
    write_file(dir / (a.method + ".json"), side.dump(1) + "\n");
    std::cerr << "error: " << e.what() << " (partial trace in " << (dir / (a.method + ".csv")).string() << ")\n";
    return 1;
  }

  if (method != Method::Reference) write_file(dir / (a.method + ".csv"), res.trace.to_csv());
  json xs = json::array();
  for (Eigen::Index i = 0; i < res.x.size(); ++i) xs.push_back(res.x(i));
  side["x_final"] = xs;
  side["f_final"] = inst.obj.value(res.x);
  side["feas_residual"] = feasibility_residual(res.x, inst.poly);
  if (x_ref) side["dist_to_ref"] = (res.x - *x_ref).norm();
  if (method == Method::FullGrad) side["converged"] = res.converged;
  write_file(dir / (a.method + ".json"), side.dump(1) + "\n");
  std::cout << side.dump(1) << "\n";
  return code;
}

struct ExperimentArgs {
  long n = 30, l = 30, m = 500;
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  std::size_t iters = 1000;
  std::size_t record_every = 10;
  double delta = 1e-3;
  std::vector<double> grid{1.0, 2.0, 5.0, 10.0, 20.0};
  std::optional<double> step;
  std::string out = default_out_root();
  std::string name;
  bool timing = false;
};

ExperimentSpec to_spec(const ExperimentArgs& a, const std::string& fallback_name) {
  ExperimentSpec s;
  s.name = a.name.empty() ? fallback_name : a.name;
  s.n = a.n;
  s.l = a.l;
  s.m = static_cast<std::size_t>(a.m);
  for (std::size_t i = 0; i < a.seeds; ++i) s.seeds.push_back(a.first_seed + i);
  s.iterations = a.iters;
  s.record_every = a.record_every;
  s.delta = a.delta;
  s.step = a.step;
  s.timing = a.timing;
  return s;
}

int report_run(const RunRecord& rec, const std::string& out) {
  const Manifest man = persist_run(rec, out);
  json j = json::array();
  for (const auto& ag : rec.aggregates)
    j.push_back({{"label", ag.label},
                 {"runs", ag.runs},
                 {"median_rel_error", std::isfinite(ag.median) ? json(ag.median) : json("inf")},
                 {"feasible_fraction", ag.feasible_fraction}});
  std::cout << json{{"experiment", rec.experiment},
                    {"output", (fs::path(out) / rec.experiment).string()},
                    {"files", man.files.size() + 1},
                    {"aggregates", j}}
                   .dump(1)
            << "\n";
  return 0;
}

int cmd_validate(std::uint64_t seed) {
  const auto results = run_property_suite(seed);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << "\n";
    failed += r.passed ? 0 : 1;
  }
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

void add_experiment_options(CLI::App* sub, ExperimentArgs& a, bool sweep) {
  sub->add_option("--n", a.n, "Dimension n")->check(CLI::PositiveNumber);
  sub->add_option("--l", a.l, "Rows of Phi")->check(CLI::PositiveNumber);
  sub->add_option("--m", a.m, "Number of constraints")->check(CLI::PositiveNumber);
  sub->add_option("--seeds", a.seeds, "Number of master seeds")->check(CLI::PositiveNumber);
  sub->add_option("--first-seed", a.first_seed, "First master seed");
  sub->add_option("--iters", a.iters, "Iterations per run")->check(CLI::PositiveNumber);
  sub->add_option("--record-every", a.record_every, "Trace stride")->check(CLI::PositiveNumber);
  sub->add_option("--out", a.out, "Output root (default $HPEN_OUT_DIR or ./out)");
  sub->add_option("--name", a.name, "Experiment directory name");
  sub->add_flag("--timing", a.timing, "Record wall-clock milliseconds in traces");
  if (sweep) {
    sub->add_option("--delta", a.delta, "Fixed delta")->check(CLI::PositiveNumber);
    sub->add_option("--grid", a.grid, "Gamma multipliers of 100 m^2")->expected(1, -1);
    sub->add_option("--step", a.step, "Shared step (default m delta / gamma_min)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpen: smooth inexact penalty methods for linearly constrained convex problems"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--config", "Flat key = value file; command-line flags win");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a seeded regression instance");
  gen->add_option("--n", ga.n, "Dimension n")->check(CLI::PositiveNumber);
  gen->add_option("--l", ga.l, "Rows of Phi")->check(CLI::PositiveNumber);
  gen->add_option("--m", ga.m, "Number of constraints")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", ga.seed, "Instance seed")->required();
  gen->add_option("-o,--output", ga.output, "Instance JSON path")->required();

  ParamsArgs pa;
  auto* par = app.add_subcommand("params", "Select (gamma, delta) with feasibility/accuracy guarantees");
  par->add_option("--instance", pa.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  par->add_option("--delta0", pa.delta0, "Target accuracy")->check(CLI::PositiveNumber);
  par->add_option("--mode", pa.mode, "feasible | strong | gap")->check(CLI::IsMember({"feasible", "strong", "gap"}));
  par->add_option("--beta", pa.beta, "Hoffman constant override")->check(CLI::PositiveNumber);
  par->add_option("--grad-bound", pa.grad_bound, "Gradient bound L override")->check(CLI::PositiveNumber);
  par->add_option("--slater-eps", pa.slater_eps, "Slater margin override")->check(CLI::PositiveNumber);
  par->add_option("--c-budget", pa.c_budget, "gamma*delta budget c override")->check(CLI::PositiveNumber);
  par->add_option("--hoffman-samples", pa.hoffman_samples, "Samples for the Hoffman estimate");
  par->add_option("--hoffman-radius", pa.hoffman_radius, "Sampling radius for the Hoffman estimate");
  par->add_option("--seed", pa.seed, "Estimator seed");

  SolveArgs sa;
  auto* sol = app.add_subcommand("solve", "Run one solver on an instance");
  sol->add_option("--instance", sa.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  sol->add_option("--method", sa.method, "fullgrad | saga | timevarying | randproj | reference")
      ->check(CLI::IsMember({"fullgrad", "saga", "timevarying", "randproj", "reference"}));
  sol->add_option("--gamma", sa.gamma, "Penalty gamma (default 100 m^2)")->check(CLI::PositiveNumber);
  sol->add_option("--delta", sa.delta, "Penalty delta (default 1e-3)")->check(CLI::PositiveNumber);
  sol->add_option("--step", sa.step, "Step size (default from the method)")->check(CLI::PositiveNumber);
  sol->add_option("--iters", sa.iters, "Iterations");
  sol->add_option("--seed", sa.seed, "Sampling seed");
  sol->add_option("--record-every", sa.record_every, "Trace stride")->check(CLI::PositiveNumber);
  sol->add_option("--tol", sa.tol, "Gradient-norm tolerance (full gradient)");
  sol->add_option("--eps-exp", sa.eps_exp, "Schedule exponent eps");
  sol->add_option("--b-exp", sa.b_exp, "Schedule exponent b");
  sol->add_option("--out", sa.out, "Output root (default $HPEN_OUT_DIR or ./out)");
  sol->add_option("--name", sa.name, "Run directory name");
  sol->add_flag("--timing", sa.timing, "Record wall-clock milliseconds");
  sol->add_flag("--no-reference", sa.no_reference, "Skip the reference solve (dist_to_ref = nan)");

  ExperimentArgs sw;
  auto* swc = app.add_subcommand("sweep-gamma", "Full-gradient gamma sweep on seeded regression instances");
  add_experiment_options(swc, sw, true);

  ExperimentArgs cm;
  auto* cmp = app.add_subcommand("compare", "PA/SAGA vs RandProj on seeded regression instances");
  add_experiment_options(cmp, cm, false);

  std::uint64_t vseed = 1;
  auto* val = app.add_subcommand("validate", "Run the property suite");
  val->add_option("--seed", vseed, "Suite seed");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> cargs;
    for (auto& s : args) cargs.push_back(s.data());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(ga);
    if (*par) return cmd_params(pa);
    if (*sol) return cmd_solve(sa);
    if (*swc) {
      ExperimentSpec spec = to_spec(sw, "sweep-gamma");
      spec.gamma_grid = sw.grid;
      return report_run(run_gamma_sweep(spec), sw.out);
    }
    if (*cmp) return report_run(run_method_comparison(to_spec(cm, "compare")), cm.out);
    if (*val) return cmd_validate(vseed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
