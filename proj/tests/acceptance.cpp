// Acceptance runner: one PASS/FAIL line per criterion, exit 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "harness.hpp"
#include "hpen/experiments.hpp"
#include "hpen/geometry.hpp"
#include "hpen/io.hpp"
#include "hpen/params.hpp"
#include "hpen/penalty.hpp"
#include "hpen/solvers.hpp"

namespace fs = std::filesystem;
using namespace hpen;
using harness::Rng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const fs::path kOut = "acceptance_out";

LinearConstraint random_constraint(Rng& r, Eigen::Index n) {
  const double scale = std::pow(10.0, r.uniform(-2.0, 2.0));
  return {scale * r.normal_vec(n), scale * r.normal(2.0)};
}

Outcome ac1_penalty_bounds() {
  Rng r(101);
  long neg = 0, cap_fail = 0, floor_fail = 0, feasible = 0, infeasible = 0;
  double worst_h0 = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(r.index(8));
    const LinearConstraint c = random_constraint(r, n);
    const Vec x = r.normal_vec(n, 3.0);
    const double delta = std::pow(10.0, r.uniform(-4.0, 1.0));
    const double h = h_delta(x, c, delta);
    const double s = c.a.dot(x) - c.b;
    const double cap = 0.25 * delta / c.a.norm();
    if (h < 0.0) ++neg;
    if (s <= 0.0) {
      ++feasible;
      if (h > cap) ++cap_fail;
    } else {
      ++infeasible;
      if (!(h > cap)) ++floor_fail;
    }
    const double h0 = h_delta(x, c, 0.0);
    const double d = project_halfspace(x, c).distance;
    const double rel = d > 0.0 ? std::abs(h0 - d) / d : std::abs(h0);
    worst_h0 = std::max(worst_h0, rel);
  }
  const bool ok = neg == 0 && cap_fail == 0 && floor_fail == 0 && worst_h0 <= 1e-14;
  return {ok, fmt("%ld feasible / %ld infeasible samples; negative %ld, cap violations %ld, floor violations %ld; "
                  "max rel |h0 - dist| %.2e",
                  feasible, infeasible, neg, cap_fail, floor_fail, worst_h0)};
}

Outcome ac2_gradient_fd() {
  double worst = 0.0;
  int points = 0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const auto pi = harness::plain_instance(200 + inst, 10, 50);
    Rng r(300 + inst);
    const PenaltyParams pp{10.0, 0.05};
    for (int p = 0; p < 100; ++p, ++points) {
      const Vec x = r.normal_vec(10, 1.5);
      const Vec g = penalized_grad(pi.obj, pi.poly, pp, x);
      Vec fd(10);
      for (Eigen::Index j = 0; j < 10; ++j) {
        const double hstep = 1e-6 * std::max(1.0, std::abs(x(j)));
        Vec xp = x, xm = x;
        xp(j) += hstep;
        xm(j) -= hstep;
        fd(j) = (penalized_value(pi.obj, pi.poly, pp, xp) - penalized_value(pi.obj, pi.poly, pp, xm)) /
                (xp(j) - xm(j));
      }
      worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-8));
    }
  }
  return {worst <= 1e-6, fmt("%d points on 10 instances, max relative error %.2e", points, worst)};
}

// Boundary passing within O(delta) of the origin so that <a, x> - b carries
// no cancellation from a large offset; h is translation invariant.
LinearConstraint near_origin_constraint(Rng& r, Eigen::Index n, double delta) {
  const double scale = std::pow(10.0, r.uniform(-2.0, 2.0));
  const Vec a = scale * r.normal_vec(n);
  return {a, delta * r.normal(2.0)};
}

Vec boundary_foot(const LinearConstraint& c, const Vec& p) {
  return p - ((c.a.dot(p) - c.b) / c.a.squaredNorm()) * c.a;
}

Outcome ac3_lipschitz() {
  Rng r(303);
  long over = 0;
  double max_ratio = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(r.index(6));
    const double delta = std::pow(10.0, r.uniform(-3.0, 0.0));
    const LinearConstraint c = near_origin_constraint(r, n, delta);
    const double an = c.a.norm();
    const Vec x = r.normal_vec(n, 3.0 * delta / an);
    const Vec v = r.normal_vec(n);
    const Vec y = x + std::pow(10.0, r.uniform(-2.0, 1.0)) * (delta / an) * v / v.norm();
    const double L = h_delta_grad_lipschitz(c, delta);
    const double ratio = (h_delta_grad(x, c, delta) - h_delta_grad(y, c, delta)).norm() / (x - y).norm();
    if (ratio > L * (1.0 + 1e-12)) ++over;
    max_ratio = std::max(max_ratio, ratio / L);
  }
  double min_tight = std::numeric_limits<double>::infinity();
  int band_pairs = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(r.index(6));
    const double delta = std::pow(10.0, r.uniform(-3.0, 0.0));
    const LinearConstraint c = near_origin_constraint(r, n, delta);
    const double an = c.a.norm();
    const Vec u = c.a / an;
    const Vec foot = boundary_foot(c, r.normal_vec(n, delta / an));
    // both points inside the quadratic band, separated along the normal
    const Vec x = foot + r.uniform(-0.9, 0.9) * (delta / an) * u;
    const Vec y = foot + r.uniform(-0.9, 0.9) * (delta / an) * u;
    if ((x - y).norm() == 0.0) continue;
    ++band_pairs;
    const double ratio = (h_delta_grad(x, c, delta) - h_delta_grad(y, c, delta)).norm() / (x - y).norm();
    min_tight = std::min(min_tight, ratio / h_delta_grad_lipschitz(c, delta));
  }
  const bool ok = over == 0 && min_tight >= 0.99;
  return {ok, fmt("1e5 pairs (separation 1e-2..1e1 band widths): %ld above bound(1+1e-12), max ratio/bound %.15f; %d band pairs min ratio/bound %.6f",
                  over, max_ratio, band_pairs, min_tight)};
}

Outcome ac4_monotone() {
  Rng r(404);
  long bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(r.index(6));
    const LinearConstraint c = random_constraint(r, n);
    const Vec x = r.normal_vec(n, 3.0);
    double d1 = t % 10 == 0 ? 0.0 : std::pow(10.0, r.uniform(-3.0, 1.0));
    double d2 = std::pow(10.0, r.uniform(-3.0, 1.0));
    if (d1 > d2) std::swap(d1, d2);
    if (h_delta(x, c, d1) > h_delta(x, c, d2)) ++bad;
  }
  return {bad == 0, fmt("1000 triples, %ld violations", bad)};
}

Outcome ac5_projection_oracle() {
  Rng r(505);
  double worst = 0.0, worst_grid = 0.0, grid_beats = 0.0;
  int unconverged = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 1 + r.index(3);
    const Vec z = r.normal_vec(2, 2.0);
    std::vector<LinearConstraint> cons;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec a = r.normal_vec(2);
      cons.push_back({a, a.dot(z) + r.uniform(0.0, 1.0)});
    }
    const Polyhedron poly(cons);
    const Vec x = r.normal_vec(2, 4.0);
    const ProjectionResult pr = project_polyhedron(x, poly, 1e-13, 1000000);
    if (!pr.converged) ++unconverged;
    const Vec brute = harness::brute_force_project_2d(x, poly);
    const Vec grid = harness::grid_project_2d(x, poly, 4.0 * (x - z).norm() + 1.0);
    worst = std::max(worst, (pr.point - brute).norm());
    const double gap = (grid - x).norm() - (brute - x).norm();
    worst_grid = std::max(worst_grid, gap);
    grid_beats = std::max(grid_beats, -gap);
  }
  const bool ok = worst <= 1e-8 && grid_beats <= 1e-12 && unconverged == 0;
  return {ok, fmt("50 instances: max |dykstra - enumeration| %.2e, %d unconverged; refined grid never closer than "
                  "enumeration (by %.1e), grid distance excess %.1e",
                  worst, unconverged, grid_beats, worst_grid)};
}

Outcome guarantee_harness(bool strong) {
  const double delta0 = 1e-2;
  const std::size_t m = 20;
  int good = 0;
  double worst_feas = 0.0, worst_metric = -std::numeric_limits<double>::infinity(), min_metric = 0.0;
  std::size_t max_iters = 0;
  std::string failures;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto vi = harness::vertex_instance(seed, 5, m, 1e-3, 0.05);
    const auto cert = make_slater_certificate(vi.poly, vi.slater_point);
    const auto curv = *vi.obj.curvature();
    ProblemConstants pre;
    pre.alpha_min = vi.poly.alpha_min();
    pre.mu_f = curv.mu_f;
    const double budget = (strong ? strong_budget(pre, delta0) : gap_budget(pre, delta0)) * (1.0 + 1e-6);
    ConstantOverrides ov;
    ov.beta = 1.0;
    const ProblemConstants k = compute_constants(vi.obj, vi.poly, cert, budget, ov, seed, 1).consts;
    const PenaltyParams pp =
        strong ? params_for_accuracy_strong(k, m, delta0) : params_for_accuracy_gap(k, m, delta0);
    const double step = 1.0 / penalized_lipschitz(k.L_f, vi.poly, pp);
    const Vec x_ref = solve_reference(vi.obj, vi.poly, Vec::Zero(5));
    TraceOptions opts;
    opts.record_every = 1000000000;
    const SolveResult res = solve_full_gradient(vi.obj, vi.poly, pp, vi.x_star, step, 2000000, 1e-10, opts);
    const double feas = feasibility_residual(res.x, vi.poly);
    const double metric = strong ? (res.x - x_ref).squaredNorm() : vi.obj.value(res.x) - vi.obj.value(x_ref);
    const bool ok = res.converged && feas <= 1e-8 && (strong ? metric <= delta0 : metric >= -1e-10 && metric <= delta0);
    good += ok ? 1 : 0;
    if (!ok)
      failures += fmt(" [seed %d: converged=%d feas=%.2e metric=%.2e]", static_cast<int>(seed),
                      static_cast<int>(res.converged), feas, metric);
    worst_feas = std::max(worst_feas, feas);
    worst_metric = std::max(worst_metric, metric);
    min_metric = std::min(min_metric, metric);
    max_iters = std::max(max_iters, res.iterations);
  }
  return {good == 20, fmt("%d/20 runs; max feas residual %.2e; %s in [%.2e, %.2e]; max iterations %zu", good,
                          worst_feas, strong ? "||x - x*||^2" : "f(x) - f(x*)", min_metric, worst_metric, max_iters) +
                          failures};
}

Outcome ac6_feasibility_proximity() { return guarantee_harness(true); }
Outcome ac7_gap() { return guarantee_harness(false); }

Outcome ac8_saga_rate() {
  const auto pi = harness::plain_instance(5, 10, 50);
  const std::size_t m = pi.poly.m();
  const PenaltyParams pp{1.0, 0.5};
  const auto curv = *pi.obj.curvature();
  ProblemConstants k;
  k.mu_f = curv.mu_f;
  k.L_f = curv.L_f;
  k.alpha_min = pi.poly.alpha_min();
  k.alpha_max = pi.poly.alpha_max();
  TraceOptions quiet;
  quiet.record_every = 1000000000;
  const SolveResult opt = solve_full_gradient(pi.obj, pi.poly, pp, Vec::Zero(10),
                                              1.0 / penalized_lipschitz(k.L_f, pi.poly, pp), 200000, 0.0, quiet);
  const Vec& xs = opt.x;
  const double step = saga_step_size(k, m, pp, true);
  const double q = saga_rate(k, m, pp);

  std::vector<std::vector<double>> curves;
  std::vector<std::size_t> ks;
  for (std::uint64_t s = 0; s < 11; ++s) {
    TraceOptions opts;
    opts.record_every = 100;
    opts.x_ref = xs;
    const SolveResult res = solve_saga(pi.obj, pi.poly, pp, Vec::Zero(10), step, 20000, 100 + s, opts);
    std::vector<double> e;
    ks.clear();
    for (const auto& rec : res.trace.records) {
      e.push_back(rec.dist_to_ref * rec.dist_to_ref);
      ks.push_back(rec.k);
    }
    curves.push_back(e);
  }
  std::vector<double> med(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    std::vector<double> col;
    for (const auto& c : curves) col.push_back(c[i]);
    med[i] = median_of(col);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int npts = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(med[i] > 1e-26 * med[0])) continue;
    const double xk = static_cast<double>(ks[i]), yk = std::log(med[i]);
    sx += xk;
    sy += yk;
    sxx += xk * xk;
    sxy += xk * yk;
    ++npts;
  }
  const double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
  const double factor = std::exp(slope);
  const double ratio = med.back() / med.front();
  const double q4 = std::pow(q, 4.0);
  const bool ok = ks.back() == 20000 && ratio <= 1e-6 && slope < 0.0 && factor >= q4 && factor < 1.0;
  return {ok, fmt("median error ratio t=20000/t=0 %.2e; fitted factor %.6f over %d points, band [q^4 = %.6f, 1); "
                  "step %.3e; ||grad F(x*)|| %.1e",
                  ratio, factor, npts, q4, step, penalized_grad(pi.obj, pi.poly, pp, xs).norm())};
}

ExperimentSpec desk_spec(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.n = 30;
  s.l = 30;
  s.m = 500;
  for (std::uint64_t i = 1; i <= 20; ++i) s.seeds.push_back(i);
  s.iterations = 1000;
  s.record_every = 10;
  return s;
}

const Aggregate& find_agg(const RunRecord& rec, const std::string& label) {
  for (const auto& a : rec.aggregates)
    if (a.label == label) return a;
  throw std::runtime_error("missing aggregate " + label);
}

Outcome ac9_comparison() {
  const RunRecord rec = run_method_comparison(desk_spec("compare"));
  persist_run(rec, kOut / "run1");
  const Aggregate& rp = find_agg(rec, "randproj");
  const Aggregate& sg = find_agg(rec, "saga");
  std::size_t diverged = 0;
  for (const auto& c : rec.cells) diverged += (c.label == "randproj" && c.diverged) ? 1 : 0;
  const bool ok = sg.median < rp.median && sg.feasible_fraction == 1.0;
  return {ok, fmt("median rel error PA/SAGA %.3e vs RandProj %.3e; PA/SAGA feasible %.0f%%; RandProj infeasible "
                  "terminal %.0f%% (reported, %zu of 20 diverged)",
                  sg.median, rp.median, 100.0 * sg.feasible_fraction, 100.0 * (1.0 - rp.feasible_fraction),
                  diverged)};
}

ExperimentSpec sweep_spec() {
  ExperimentSpec s = desk_spec("sweep-gamma");
  s.gamma_grid = {1.0, 2.0, 5.0, 10.0, 20.0};
  s.delta = 1e-3;
  return s;
}

Outcome ac10_gamma_sweep() {
  const RunRecord rec = run_gamma_sweep(sweep_spec());
  persist_run(rec, kOut / "run1");
  bool mono = true;
  std::string meds;
  for (std::size_t i = 0; i < rec.aggregates.size(); ++i) {
    meds += fmt("%s%.4e", i ? ", " : "", rec.aggregates[i].median);
    if (i >= 1 && i < 4 && rec.aggregates[i].median > rec.aggregates[i - 1].median) mono = false;
  }
  const double feas0 = rec.aggregates.front().feasible_fraction;
  const double infeas_last = 1.0 - rec.aggregates.back().feasible_fraction;
  return {mono && feas0 == 1.0, fmt("medians [%s]; feasible at 100m^2 %.2f; infeasible at 20*100m^2 %.0f%% (reported)",
                                    meds.c_str(), feas0, 100.0 * infeas_last)};
}

Outcome ac11_time_varying() {
  int good = 0;
  double worst_ratio = 0.0;
  bool gd_decreasing = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ki = harness::known_solution_instance(seed, 5, 20);
    TraceOptions opts;
    opts.record_every = 100;
    opts.x_ref = ki.x_star;
    const SolveResult res =
        solve_time_varying(ki.obj, ki.poly, make_schedule(0.25, 1.6), Vec::Zero(5), 100000, opts);
    double e100 = NAN, e_end = NAN;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& rec : res.trace.records) {
      if (rec.k == 100) e100 = rec.dist_to_ref;
      if (rec.k == 100000) e_end = rec.dist_to_ref;
      const double gd = rec.gamma * rec.delta;
      if (!(gd < prev)) gd_decreasing = false;
      prev = gd;
    }
    const double ratio = e_end / e100;
    worst_ratio = std::max(worst_ratio, ratio);
    good += ratio <= 0.1 ? 1 : 0;
  }

  const auto ki = harness::known_solution_instance(99, 5, 20);
  const PenaltyParams pp{1.0, 0.1};
  const double step = 1.0 / penalized_lipschitz(ki.obj.curvature()->L_f, ki.poly, pp);
  TraceOptions opts;
  opts.x_ref = ki.x_star;
  const SolveResult tv =
      solve_time_varying(ki.obj, ki.poly, make_constant_schedule(step, pp), Vec::Zero(5), 500, opts);
  const SolveResult fg = solve_full_gradient(ki.obj, ki.poly, pp, Vec::Zero(5), step, 500, 0.0, opts);
  const bool bitwise = tv.trace.to_csv() == fg.trace.to_csv() &&
                       std::equal(tv.x.data(), tv.x.data() + 5, fg.x.data(),
                                  [](double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; });
  return {good == 20 && gd_decreasing && bitwise,
          fmt("%d/20 instances with ||x_1e5 - x*|| <= 0.1 ||x_100 - x*|| (max ratio %.2e); gamma*delta strictly "
              "decreasing: %s; constant schedule == full gradient bitwise: %s",
              good, worst_ratio, gd_decreasing ? "yes" : "no", bitwise ? "yes" : "no")};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  return files;
}

Outcome ac12_determinism() {
  persist_run(run_method_comparison(desk_spec("compare")), kOut / "run2");
  persist_run(run_gamma_sweep(sweep_spec()), kOut / "run2");
  const auto a = snapshot(kOut / "run1");
  const auto b = snapshot(kOut / "run2");
  std::size_t csv = 0;
  for (const auto& [k, v] : a) csv += k.size() > 4 && k.substr(k.size() - 4) == ".csv" ? 1 : 0;
  const bool ok = !a.empty() && a == b;
  return {ok, fmt("%zu files (%zu CSV) from both experiments rerun with identical master seeds; byte-identical: %s",
                  a.size(), csv, ok ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const double none = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria = {
      {"AC1", "penalty bounds and exact-distance limit", 5.0, ac1_penalty_bounds},
      {"AC2", "penalized gradient vs central differences", 5.0, ac2_gradient_fd},
      {"AC3", "penalty gradient Lipschitz constant", 5.0, ac3_lipschitz},
      {"AC4", "monotonicity in delta", none, ac4_monotone},
      {"AC5", "polyhedron projection vs brute force", 10.0, ac5_projection_oracle},
      {"AC6", "feasibility and proximity of selected parameters", 30.0, ac6_feasibility_proximity},
      {"AC7", "objective gap of selected parameters", 30.0, ac7_gap},
      {"AC8", "SAGA linear rate", 30.0, ac8_saga_rate},
      {"AC9", "PA/SAGA vs RandProj (n=l=30, m=500)", 180.0, ac9_comparison},
      {"AC10", "gamma sweep (full gradient)", 120.0, ac10_gamma_sweep},
      {"AC11", "time-varying schedule", 60.0, ac11_time_varying},
      {"AC12", "determinism of experiment outputs", none, ac12_determinism},
  };
  fs::remove_all(kOut);
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::string budget = std::isfinite(c.budget_s) ? fmt(", budget %.0f s", c.budget_s) : "";
    std::printf("%s %s %s: %s [%.2f s%s%s]\n", c.id, pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), secs,
                budget.c_str(), in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
