#include "hpen/validate.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "hpen/experiments.hpp"
#include "hpen/geometry.hpp"
#include "hpen/io.hpp"
#include "hpen/params.hpp"
#include "hpen/penalty.hpp"
#include "hpen/solvers.hpp"

namespace hpen {

namespace {

struct Rng {
  explicit Rng(std::uint64_t s) : gen(s) {}
  double normal() { return nd(gen); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  Vec normal_vec(Eigen::Index n, double scale = 1.0) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
    return v;
  }
  std::mt19937_64 gen;
  std::normal_distribution<double> nd{0.0, 1.0};
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

RegressionInstance small_instance(std::uint64_t seed, Eigen::Index n, std::size_t m) {
  return generate_regression_instance(n, n, m, seed);
}

CheckResult penalty_bounds(Rng& r) {
  long bad = 0;
  for (int s = 0; s < 20000; ++s) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(s % 5);
    LinearConstraint c{r.normal_vec(n), r.normal()};
    const Vec x = r.normal_vec(n, 2.0);
    const double delta = std::exp(r.uniform(-8.0, 2.0));
    const double h = h_delta(x, c, delta);
    const double cap = 0.25 * delta / c.a.norm();
    const bool feasible = c.a.dot(x) - c.b <= 0.0;
    if (h < 0.0 || (feasible && h > cap) || (!feasible && !(h > cap))) ++bad;
  }
  return {"penalty: nonnegative, feasible cap, infeasible floor", bad == 0, fmt("%g violations", bad)};
}

CheckResult penalty_distance(Rng& r) {
  double worst = 0.0;
  for (int s = 0; s < 5000; ++s) {
    LinearConstraint c{r.normal_vec(3), r.normal()};
    const Vec x = r.normal_vec(3, 3.0);
    const double d = project_halfspace(x, c).distance;
    const double h = h_delta(x, c, 0.0);
    worst = std::max(worst, std::abs(h - d) / std::max(d, 1e-300));
  }
  return {"penalty: delta = 0 equals halfspace distance", worst <= 1e-14, fmt("max rel diff %.3g", worst)};
}

CheckResult penalty_monotone_convex(Rng& r) {
  long bad = 0;
  for (int s = 0; s < 2000; ++s) {
    LinearConstraint c{r.normal_vec(4), r.normal()};
    const Vec x = r.normal_vec(4, 2.0);
    const Vec y = r.normal_vec(4, 2.0);
    double d1 = std::exp(r.uniform(-6.0, 1.0)), d2 = std::exp(r.uniform(-6.0, 1.0));
    if (d1 > d2) std::swap(d1, d2);
    if (h_delta(x, c, d1) > h_delta(x, c, d2)) ++bad;
    const double mid = h_delta(0.5 * (x + y), c, d1);
    if (mid > 0.5 * (h_delta(x, c, d1) + h_delta(y, c, d1)) * (1.0 + 1e-12) + 1e-15) ++bad;
  }
  return {"penalty: monotone in delta and midpoint convex", bad == 0, fmt("%g violations", bad)};
}

CheckResult penalty_gradient(Rng& r) {
  long bad = 0;
  for (int s = 0; s < 5000; ++s) {
    LinearConstraint c{r.normal_vec(3), r.normal()};
    const double delta = std::exp(r.uniform(-5.0, 1.0));
    const Vec x = r.normal_vec(3, 2.0 * delta);
    const Vec y = x + r.normal_vec(3, delta);
    const Vec gx = h_delta_grad(x, c, delta);
    const Vec gy = h_delta_grad(y, c, delta);
    if (gx.norm() > 1.0 + 1e-15) ++bad;
    if ((gx - gy).norm() > h_delta_grad_lipschitz(c, delta) * (x - y).norm() * (1.0 + 1e-12)) ++bad;
  }
  return {"penalty: gradient norm <= 1 and Lipschitz ||a||/(2 delta)", bad == 0, fmt("%g violations", bad)};
}

CheckResult penalized_identities(Rng& r) {
  const auto inst = small_instance(r.gen(), 6, 150);
  double worst = 0.0;
  long nesting = 0, bitwise = 0;
  for (int s = 0; s < 20; ++s) {
    const Vec x = r.normal_vec(6, 0.5);
    const PenaltyParams pp{std::exp(r.uniform(0.0, 8.0)), std::exp(r.uniform(-6.0, 0.0))};
    Vec avg = Vec::Zero(6);
    for (std::size_t i = 0; i < inst.poly.m(); ++i) avg += component_grad(inst.obj, inst.poly, pp, i, x);
    avg /= static_cast<double>(inst.poly.m());
    const Vec full = penalized_grad(inst.obj, inst.poly, pp, x);
    worst = std::max(worst, (avg - full).cwiseAbs().maxCoeff() / std::max(full.cwiseAbs().maxCoeff(), 1e-300));
    if (penalized_grad_serial(inst.obj, inst.poly, pp, x) != full) ++bitwise;
    const double f = inst.obj.value(x);
    const double F1 = penalized_value(inst.obj, inst.poly, pp, x);
    const double F2 = penalized_value(inst.obj, inst.poly, {pp.gamma, 2.0 * pp.delta}, x);
    if (!(f <= F1 && F1 <= F2)) ++nesting;
  }
  return {"penalty: component average, serial/parallel bitwise, level nesting",
          worst <= 1e-12 && nesting == 0 && bitwise == 0,
          fmt("max rel diff %.3g, nesting+bitwise failures %g", worst, static_cast<double>(nesting + bitwise))};
}

CheckResult objective_curvature(Rng& r) {
  const auto inst = small_instance(r.gen(), 8, 5);
  const auto cb = curvature_bounds(inst.obj);
  long bad = 0;
  for (int s = 0; s < 2000; ++s) {
    const Vec x = r.normal_vec(8, 3.0), y = r.normal_vec(8, 3.0);
    const Vec gx = inst.obj.gradient(x), gy = inst.obj.gradient(y);
    const double lhs = inst.obj.value(y);
    const double rhs = inst.obj.value(x) + gx.dot(y - x) + 0.5 * cb.mu_f * (y - x).squaredNorm();
    if (lhs < rhs - 1e-9 * (1.0 + std::abs(lhs))) ++bad;
    if ((gx - gy).norm() > cb.L_f * (x - y).norm() * (1.0 + 1e-10)) ++bad;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(inst.obj.Phi().transpose() * inst.obj.Phi());
  const double err = std::abs(cb.L_f - 2.0 * es.eigenvalues().maxCoeff()) / cb.L_f;
  return {"problem: strong convexity and gradient Lipschitz", bad == 0 && err <= 1e-10,
          fmt("%g violations, eigen rel diff %.3g", bad, err)};
}

CheckResult projection_properties(Rng& r) {
  const auto inst = small_instance(r.gen(), 4, 12);
  long bad = 0;
  double worst_idem = 0.0;
  for (int s = 0; s < 30; ++s) {
    const Vec x = r.normal_vec(4, 2.0), y = r.normal_vec(4, 2.0);
    const auto px = project_polyhedron(x, inst.poly, 1e-12);
    const auto py = project_polyhedron(y, inst.poly, 1e-12);
    if (!px.converged || !py.converged) ++bad;
    if ((px.point - py.point).norm() > (x - y).norm() * (1.0 + 1e-9)) ++bad;
    worst_idem = std::max(worst_idem, (project_polyhedron(px.point, inst.poly, 1e-12).point - px.point).norm());
    const double delta = 0.5 * inst.slater.margin;
    const auto sh = project_shrunk(x, inst.poly, delta, 1e-12);
    if (sh.converged) {
      for (const auto& c : inst.poly.constraints())
        if (h_delta(sh.point, c, delta) > 1e-9) ++bad;
    }
  }
  return {"geometry: nonexpansive, idempotent, shrunk projection unpenalized", bad == 0 && worst_idem <= 1e-10,
          fmt("%g violations, idempotence drift %.3g", bad, worst_idem)};
}

CheckResult params_consistency(Rng& r) {
  long bad = 0;
  std::string note;
  ProblemConstants k{1.0, 1.5, 1.0, 2.0, 0.5, 1.0, 4.0, 1.0};
  for (int s = 0; s < 50; ++s) {
    k.alpha_min = r.uniform(0.5, 2.0);
    k.alpha_max = k.alpha_min * r.uniform(1.0, 3.0);
    k.beta_hat = r.uniform(0.3, 2.0);
    k.L_hat = r.uniform(0.1, 50.0);
    k.epsilon = r.uniform(0.01, 1.0);
    k.mu_f = r.uniform(0.1, 5.0);
    const std::size_t m = 1 + static_cast<std::size_t>(r.uniform(0.0, 200.0));
    const double d0 = std::exp(r.uniform(-8.0, 0.0));
    k.c = std::max(strong_budget(k, d0), gap_budget(k, d0));
    try {
      const auto ps = params_for_accuracy_strong(k, m, d0);
      check_penalty_params(k, m, ps, strong_budget(k, d0));
      const auto pg = params_for_accuracy_gap(k, m, d0);
      check_penalty_params(k, m, pg, gap_budget(k, d0));
      const double dmax = delta_range_feasibility(k, m, k.c);
      if (gamma_threshold(k, m, dmax) > k.c / dmax * (1.0 + 1e-12)) ++bad;
      if (delta_range_feasibility(k, m, 2.0 * k.c) < dmax) ++bad;
      const double d = 0.5 * dmax;
      ProblemConstants k2 = k;
      k2.L_hat *= 2.0;
      if (std::abs(gamma_threshold(k2, m, d) - 2.0 * gamma_threshold(k, m, d)) >
          1e-12 * gamma_threshold(k2, m, d))
        ++bad;
    } catch (const std::exception& e) {
      ++bad;
      note = e.what();
    }
  }
  return {"params: strong/gap outputs re-validate, Gamma <= c/delta, monotone in c", bad == 0,
          fmt("%g failures ", bad) + note};
}

CheckResult schedule_properties() {
  const Schedule s = make_schedule(0.25, 1.6);
  bool ok = std::abs(s.gamma(1) * s.delta(1) - std::log(2.0)) < 1e-15;
  double prev_a = INFINITY, prev_b = INFINITY;
  for (double k : {1e4, 1e5, 1e6}) {
    const auto kk = static_cast<std::size_t>(k);
    const double a = s.step(kk) * s.gamma(kk) * s.gamma(kk);
    const double b = s.gamma(kk) * s.delta(kk) / (s.step(kk) * s.step(kk));
    ok = ok && a < prev_a && b < prev_b;
    prev_a = a;
    prev_b = b;
  }
  bool rejected = false;
  try {
    make_schedule(0.5, 1.9);
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  return {"params: schedule limits decrease and 1+2eps-b<0 enforced", ok && rejected, ""};
}

CheckResult saga_identity(Rng& r) {
  const auto inst = small_instance(r.gen(), 5, 30);
  const PenaltyParams pp{50.0, 0.05};
  SagaState st = saga_init(inst.obj, inst.poly, pp, Vec::Zero(5));
  Vec scratch(5);
  for (int t = 0; t < 40; ++t)
    saga_step(inst.obj, inst.poly, pp, st, static_cast<std::size_t>(r.uniform(0.0, 30.0)) % 30, 1e-3, scratch);
  Vec avg = Vec::Zero(5);
  for (std::size_t j = 0; j < 30; ++j) {
    const Vec gj = component_grad(inst.obj, inst.poly, pp, j, st.x);
    avg += gj - st.stored_grads.row(static_cast<Eigen::Index>(j)).transpose() + st.grad_sum / 30.0;
  }
  avg /= 30.0;
  const Vec full = penalized_grad(inst.obj, inst.poly, pp, st.x);
  const double err = (avg - full).norm() / std::max(full.norm(), 1e-300);
  Vec exact = Vec::Zero(5);
  for (Eigen::Index j = 0; j < 30; ++j) exact += st.stored_grads.row(j).transpose();
  const double drift = (exact - st.grad_sum).cwiseAbs().maxCoeff();
  return {"solvers: SAGA direction averages to the full gradient", err <= 1e-10 && drift <= 1e-9 * 30,
          fmt("rel err %.3g, sum drift %.3g", err, drift)};
}

CheckResult reference_agreement(Rng& r) {
  double worst = 0.0;
  for (int s = 0; s < 3; ++s) {
    const auto inst = small_instance(r.gen(), 3, 8);
    const Vec a = solve_reference(inst.obj, inst.poly, Vec::Zero(3));
    const Vec b = solve_reference_projected(inst.obj, inst.poly, Vec::Zero(3), 1e-13, 2000000);
    worst = std::max(worst, (a - b).norm() / std::max(1.0, a.norm()));
  }
  return {"solvers: exact reference agrees with projected gradient", worst <= 1e-6, fmt("max diff %.3g", worst)};
}

CheckResult generator_determinism(Rng& r) {
  const std::uint64_t s = r.gen();
  const auto a = generate_regression_instance(6, 6, 40, s);
  const auto b = generate_regression_instance(6, 6, 40, s);
  const bool same = instance_to_json(a.obj, a.poly) == instance_to_json(b.obj, b.poly);
  const auto back = instance_from_json(instance_to_json(a.obj, a.poly));
  const bool round = back.obj.Phi() == a.obj.Phi() && back.poly.A() == a.poly.A() && back.poly.b() == a.poly.b();
  return {"experiments: generator deterministic, JSON round trip exact, Slater margin",
          same && round && a.slater.margin >= kSlaterEps, ""};
}

}  // namespace

std::vector<CheckResult> run_property_suite(std::uint64_t seed) {
  Rng r(seed);
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return penalty_bounds(r); },          [&] { return penalty_distance(r); },
      [&] { return penalty_monotone_convex(r); }, [&] { return penalty_gradient(r); },
      [&] { return penalized_identities(r); },    [&] { return objective_curvature(r); },
      [&] { return projection_properties(r); },   [&] { return params_consistency(r); },
      [] { return schedule_properties(); },       [&] { return saga_identity(r); },
      [&] { return reference_agreement(r); },     [&] { return generator_determinism(r); },
  };
  std::vector<CheckResult> out;
  for (auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace hpen
