#include "hpen/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hpen/geometry.hpp"

namespace hpen {

namespace {

Vec sample_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = normal(rng);
  const double nrm = d.norm();
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(n));
  return nrm > 0.0 ? Vec(d * (r / nrm)) : Vec::Zero(n);
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("constants: ") + name + " must be positive and finite");
}

void require_constants(const ProblemConstants& k, std::size_t m) {
  if (m == 0) throw std::invalid_argument("constants: m must be >= 1");
  require_positive(k.alpha_min, "alpha_min");
  require_positive(k.alpha_max, "alpha_max");
  require_positive(k.beta_hat, "beta_hat");
  require_positive(k.L_hat, "L_hat");
  require_positive(k.epsilon, "epsilon");
  if (k.alpha_min > k.alpha_max) throw std::invalid_argument("constants: alpha_min > alpha_max");
}

}  // namespace

double hoffman_ratio(const Polyhedron& poly, const Vec& x) {
  require_dim(x, poly.n(), "hoffman_ratio");
  const Vec v = poly.A() * x - poly.b();
  double denom = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) > 0.0) denom += v(i) / poly.norms()(i);
  if (denom == 0.0) return 0.0;
  return project_polyhedron(x, poly).distance / denom;
}

double default_hoffman_radius(const Polyhedron& poly) {
  return 1.0 + 2.0 * (poly.b().cwiseAbs().cwiseQuotient(poly.norms())).maxCoeff();
}

HoffmanEstimate estimate_hoffman(const Polyhedron& poly, std::uint64_t rng_seed, std::size_t samples, double radius,
                                 std::optional<double> override_beta) {
  HoffmanEstimate est;
  if (override_beta) {
    require_positive(*override_beta, "beta override");
    est.beta = *override_beta;
    est.overridden = true;
    return est;
  }
  if (samples == 0) throw std::invalid_argument("estimate_hoffman: samples must be >= 1");
  require_positive(radius, "Hoffman sampling radius");
  std::mt19937_64 rng(rng_seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec x = sample_ball(rng, poly.n(), radius);
    const Vec v = poly.A() * x - poly.b();
    double denom = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v(i) > 0.0) denom += v(i) / poly.norms()(i);
    if (denom == 0.0) continue;
    ++est.infeasible_samples;
    const ProjectionResult pr = project_polyhedron(x, poly);
    if (!pr.converged) ++est.unconverged_projections;
    est.beta = std::max(est.beta, pr.distance / denom);
  }
  est.degenerate = est.infeasible_samples == 0;
  return est;
}

double quadratic_grad_bound(const QuadraticObjective& obj, double radius) {
  const double phi_norm = std::sqrt(obj.curvature()->L_f / 2.0);
  return 2.0 * phi_norm * (phi_norm * radius + obj.x0().norm());
}

GradBoundEstimate estimate_grad_bound(const Objective& obj, const Polyhedron& poly, const SlaterCertificate& slater,
                                      double c, double beta_hat, std::uint64_t rng_seed) {
  require_positive(c, "c");
  if (!(beta_hat >= 0.0)) throw std::invalid_argument("estimate_grad_bound: beta_hat must be >= 0");
  const auto curv = obj.curvature();
  if (!curv || !(curv->mu_f > 0.0))
    throw std::invalid_argument(
        "estimate_grad_bound: mu_f = 0, the level set may be unbounded; supply the gradient bound explicitly "
        "(--grad-bound)");
  const Vec& xh = slater.point;
  GradBoundEstimate out;
  out.level = obj.value(xh) + c / (4.0 * poly.alpha_min());
  const double tail = beta_hat * static_cast<double>(poly.m()) * slater.margin / poly.alpha_min();

  if (const auto* q = dynamic_cast<const QuadraticObjective*>(&obj)) {
    const Vec xu = q->Phi().colPivHouseholderQr().solve(q->x0());
    const double fmin = q->value(xu);
    const double r1 = std::sqrt(std::max(out.level - fmin, 0.0) / (curv->mu_f / 2.0));
    const double b1 = xu.norm() + r1;
    const double b2 = b1 + 2.0 * xh.norm();
    out.radius = 2.0 * b1 + b2 + tail;
    out.L_hat = quadratic_grad_bound(*q, out.radius);
    return out;
  }

  const double g = obj.gradient(xh).norm();
  const double r = (g + std::sqrt(g * g + 2.0 * curv->mu_f * (out.level - obj.value(xh)))) / curv->mu_f;
  const double b1 = xh.norm() + r;
  const double b2 = b1 + 2.0 * xh.norm();
  out.radius = 2.0 * b1 + b2 + tail;
  std::mt19937_64 rng(rng_seed);
  Vec grad(obj.dim());
  for (int s = 0; s < 10000; ++s) {
    obj.gradient(sample_ball(rng, obj.dim(), out.radius), grad);
    out.L_hat = std::max(out.L_hat, grad.norm());
  }
  out.sampled = true;
  return out;
}

ConstantsReport compute_constants(const Objective& obj, const Polyhedron& poly, const SlaterCertificate& slater,
                                  double c, const ConstantOverrides& overrides, std::uint64_t rng_seed,
                                  std::size_t hoffman_samples, std::optional<double> hoffman_radius) {
  ConstantsReport rep;
  auto& k = rep.consts;
  const auto curv = obj.curvature();
  if (!curv) throw std::invalid_argument("compute_constants: objective has no curvature bounds");
  k.alpha_min = poly.alpha_min();
  k.alpha_max = poly.alpha_max();
  k.mu_f = curv->mu_f;
  k.L_f = curv->L_f;
  k.epsilon = overrides.slater_eps.value_or(slater.margin);
  require_positive(k.epsilon, "Slater margin epsilon");
  k.c = overrides.c_budget.value_or(c);
  require_positive(k.c, "c");

  rep.hoffman = estimate_hoffman(poly, rng_seed, std::max<std::size_t>(hoffman_samples, 1),
                                 hoffman_radius.value_or(default_hoffman_radius(poly)), overrides.beta);
  if (rep.hoffman.degenerate)
    throw std::runtime_error("estimate_hoffman: no infeasible sample found; supply beta explicitly (--beta)");
  k.beta_hat = rep.hoffman.beta;

  if (overrides.grad_bound) {
    k.L_hat = *overrides.grad_bound;
  } else {
    rep.grad_bound = estimate_grad_bound(obj, poly, SlaterCertificate{slater.point, k.epsilon}, k.c, k.beta_hat,
                                         rng_seed ^ 0x9e3779b97f4a7c15ULL);
    k.L_hat = rep.grad_bound->L_hat;
  }
  require_positive(k.L_hat, "L_hat");
  return rep;
}

double delta_upper_limit(const ProblemConstants& consts, std::size_t m) {
  const double bm = consts.beta_hat * static_cast<double>(m);
  return std::min(consts.epsilon, 16.0 * consts.alpha_min * consts.alpha_min / (bm * bm));
}

double gamma_threshold(const ProblemConstants& consts, std::size_t m, double delta) {
  require_constants(consts, m);
  if (!(delta > 0.0)) throw std::invalid_argument("gamma_threshold: delta must be > 0");
  if (!(delta < consts.epsilon))
    throw std::invalid_argument("gamma_threshold: delta must be < epsilon (Slater margin)");
  const double md = static_cast<double>(m);
  const double bm = consts.beta_hat * md;
  if (!(delta < 16.0 * consts.alpha_min * consts.alpha_min / (bm * bm)))
    throw std::invalid_argument("gamma_threshold: delta must be < 16 alpha_min^2 / (beta^2 m^2)");
  const double sd = std::sqrt(delta);
  const double denom = 1.0 / bm - sd / (4.0 * consts.alpha_min);
  if (!(denom > 0.0)) throw std::invalid_argument("gamma_threshold: 1/(m beta) - sqrt(delta)/(4 alpha_min) <= 0");
  const double t1 = consts.L_hat / denom;
  const double t2 = 4.0 * md * consts.L_hat * consts.alpha_max * (1.0 / sd + bm / consts.alpha_min);
  return std::max(t1, t2);
}

double delta_range_feasibility(const ProblemConstants& consts, std::size_t m, double c) {
  require_constants(consts, m);
  require_positive(c, "c");
  const double md = static_cast<double>(m);
  const double a = consts.alpha_min;
  const double L = consts.L_hat;
  const double beta = consts.beta_hat;
  // Both bounds written as X / (sqrt(c^2 + X) + c) to avoid cancellation.
  const double x1 = 64.0 * a * a * L * c / (md * beta);
  const double r1 = x1 / ((std::sqrt(c * c + x1) + c) * 8.0 * a * L);
  const double y2 = c * beta * a / (L * consts.alpha_max);
  const double r2 = y2 / ((std::sqrt(a * a + y2) + a) * 2.0 * md * beta);
  const double root = std::min(r1, r2);
  double delta = root * root * (1.0 - 1e-12);
  const double upper = delta_upper_limit(consts, m);
  if (!(delta < upper)) delta = upper * (1.0 - 1e-12);
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("delta_range_feasibility: empty admissible delta range");
  for (int i = 0; i < 1000 && gamma_threshold(consts, m, delta) * delta > c; ++i) delta *= 1.0 - 1e-9;
  if (gamma_threshold(consts, m, delta) * delta > c)
    throw std::invalid_argument("delta_range_feasibility: no delta with Gamma <= c / delta");
  return delta;
}

double strong_budget(const ProblemConstants& consts, double delta0) {
  return 2.0 * consts.mu_f * consts.alpha_min * delta0;
}

double gap_budget(const ProblemConstants& consts, double delta0) { return 4.0 * consts.alpha_min * delta0; }

void check_penalty_params(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp, double budget) {
  validate_penalty(pp, true);
  const double big_gamma = gamma_threshold(consts, m, pp.delta);
  if (!(big_gamma <= pp.gamma * (1.0 + 1e-12)))
    throw std::invalid_argument("penalty check: Gamma <= gamma violated (Gamma = " + std::to_string(big_gamma) +
                                ", gamma = " + std::to_string(pp.gamma) + ")");
  if (!(pp.gamma * pp.delta <= budget * (1.0 + 1e-12)))
    throw std::invalid_argument("penalty check: gamma delta <= budget violated");
}

PenaltyParams params_for_budget(const ProblemConstants& consts, std::size_t m, double budget) {
  const double delta = 0.5 * delta_range_feasibility(consts, m, budget);
  const double cap = budget / delta;
  const double big_gamma = gamma_threshold(consts, m, delta);
  PenaltyParams pp{std::min(cap, std::sqrt(big_gamma * cap)), delta};
  check_penalty_params(consts, m, pp, budget);
  return pp;
}

PenaltyParams params_for_feasibility(const ProblemConstants& consts, std::size_t m) {
  return params_for_budget(consts, m, consts.c);
}

namespace {

void require_budget_covered(const ProblemConstants& consts, double budget) {
  if (!(consts.c >= budget * (1.0 - 1e-12)))
    throw std::invalid_argument(
        "params: the gradient bound was estimated for a gamma-delta budget c smaller than the accuracy budget; "
        "recompute constants with c >= " + std::to_string(budget));
}

}  // namespace

PenaltyParams params_for_accuracy_strong(const ProblemConstants& consts, std::size_t m, double delta0) {
  require_positive(delta0, "delta0");
  if (!(consts.mu_f > 0.0)) throw std::invalid_argument("params_for_accuracy_strong: mu_f must be > 0");
  const double budget = strong_budget(consts, delta0);
  require_budget_covered(consts, budget);
  return params_for_budget(consts, m, budget);
}

PenaltyParams params_for_accuracy_gap(const ProblemConstants& consts, std::size_t m, double delta0) {
  require_positive(delta0, "delta0");
  const double budget = gap_budget(consts, delta0);
  require_budget_covered(consts, budget);
  return params_for_budget(consts, m, budget);
}

double level_value(const Objective& obj, const Polyhedron& poly, const ProblemConstants& consts, const Vec& x_hat,
                   const PenaltyParams& pp) {
  validate_penalty(pp, false);
  if (feasibility_residual(x_hat, poly) > 0.0) throw std::invalid_argument("level_value: x_hat is infeasible");
  return obj.value(x_hat) + pp.gamma * pp.delta / (4.0 * consts.alpha_min);
}

double saga_step_size(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp, bool strongly_convex) {
  if (!(pp.delta > 0.0)) throw std::invalid_argument("saga_step_size: delta must be > 0");
  if (!(pp.gamma >= 0.0)) throw std::invalid_argument("saga_step_size: gamma must be >= 0");
  const double curv = consts.L_f + pp.gamma * consts.alpha_max / (2.0 * pp.delta);
  if (strongly_convex) return 1.0 / (2.0 * (consts.mu_f * static_cast<double>(m) + curv));
  return 1.0 / (3.0 * curv);
}

double saga_rate(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp) {
  return 1.0 - consts.mu_f * saga_step_size(consts, m, pp, true);
}

double Schedule::step(std::size_t k) const {
  if (k == 0) throw std::out_of_range("schedule index starts at 1");
  if (kind_ == Kind::Constant) return step_;
  return std::pow(static_cast<double>(k), -(0.5 + eps_exp_));
}

double Schedule::gamma(std::size_t k) const {
  if (k == 0) throw std::out_of_range("schedule index starts at 1");
  if (kind_ == Kind::Constant) return pp_.gamma;
  return std::log(static_cast<double>(k) + 1.0);
}

double Schedule::delta(std::size_t k) const {
  if (k == 0) throw std::out_of_range("schedule index starts at 1");
  if (kind_ == Kind::Constant) return pp_.delta;
  return std::pow(static_cast<double>(k), -b_exp_);
}

Schedule make_schedule(double eps_exp, double b_exp) {
  if (!(eps_exp > 0.0 && eps_exp <= 0.5)) throw std::invalid_argument("make_schedule: eps must lie in (0, 1/2]");
  if (!(1.0 + 2.0 * eps_exp - b_exp < 0.0)) throw std::invalid_argument("make_schedule: requires 1+2eps-b<0");
  // d/dk [ln(k+1) k^-b] < 0 iff k/(k+1) < b ln(k+1); the left side is below 1
  // and the right side is increasing, so checking k = 1 covers every k.
  if (!(0.5 < b_exp * std::log(2.0))) throw std::invalid_argument("make_schedule: gamma_k delta_k not decreasing");
  Schedule s;
  s.kind_ = Schedule::Kind::Power;
  s.eps_exp_ = eps_exp;
  s.b_exp_ = b_exp;
  double prev = s.gamma(1) * s.delta(1);
  for (std::size_t k = 2; k <= 1000000; k = k < 1000 ? k + 1 : k * 10) {
    const double cur = s.gamma(k) * s.delta(k);
    if (!(cur < prev)) throw std::logic_error("make_schedule: gamma_k delta_k spot check failed");
    prev = cur;
  }
  return s;
}

Schedule make_constant_schedule(double step, const PenaltyParams& pp) {
  if (!(step > 0.0)) throw std::invalid_argument("make_constant_schedule: step must be > 0");
  validate_penalty(pp, true);
  Schedule s;
  s.kind_ = Schedule::Kind::Constant;
  s.step_ = step;
  s.pp_ = pp;
  return s;
}

}  // namespace hpen
