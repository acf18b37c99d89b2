#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "hpen/penalty.hpp"
#include "hpen/problem.hpp"

namespace hpen {

struct ProblemConstants {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double beta_hat = 0.0;
  double L_hat = 0.0;
  double epsilon = 0.0;
  double mu_f = 0.0;
  double L_f = 0.0;
  double c = 0.0;
};

struct HoffmanEstimate {
  double beta = 0.0;
  bool degenerate = false;  // no infeasible sample; caller must supply beta
  bool overridden = false;
  std::size_t infeasible_samples = 0;
  std::size_t unconverged_projections = 0;
};

// dist(x, X) / sum_i dist(x, X_i) for an infeasible x, 0 for feasible x.
double hoffman_ratio(const Polyhedron& poly, const Vec& x);

// Max of hoffman_ratio over points drawn uniformly in the ball of the given
// radius about the origin. This is a lower bound on the smallest valid beta.
HoffmanEstimate estimate_hoffman(const Polyhedron& poly, std::uint64_t rng_seed, std::size_t samples, double radius,
                                 std::optional<double> override_beta = std::nullopt);
double default_hoffman_radius(const Polyhedron& poly);

struct GradBoundEstimate {
  double L_hat = 0.0;
  double radius = 0.0;  // R
  double level = 0.0;   // f(x_hat) + c / (4 alpha_min)
  bool sampled = false;
};

// 2 ||Phi|| (||Phi|| R + ||x0||)
double quadratic_grad_bound(const QuadraticObjective& obj, double radius);

// Bound on ||grad f|| over the ball of radius R = 2 B1 + B2 + beta m eps / alpha_min
// that holds every penalized minimizer with gamma delta <= c. x_hat is the
// Slater point. Quadratics use the closed form, other objectives sample 1e4
// points in the ball.
GradBoundEstimate estimate_grad_bound(const Objective& obj, const Polyhedron& poly, const SlaterCertificate& slater,
                                      double c, double beta_hat, std::uint64_t rng_seed = 0);

struct ConstantOverrides {
  std::optional<double> beta;
  std::optional<double> grad_bound;
  std::optional<double> slater_eps;
  std::optional<double> c_budget;
};

struct ConstantsReport {
  ProblemConstants consts;
  HoffmanEstimate hoffman;
  std::optional<GradBoundEstimate> grad_bound;
};

// Fills every constant, honouring overrides. c is the budget when no
// c_budget override is given.
ConstantsReport compute_constants(const Objective& obj, const Polyhedron& poly, const SlaterCertificate& slater,
                                  double c, const ConstantOverrides& overrides, std::uint64_t rng_seed,
                                  std::size_t hoffman_samples, std::optional<double> hoffman_radius = std::nullopt);

// Upper end of the open delta range: min(eps, 16 alpha_min^2 / (beta^2 m^2)).
double delta_upper_limit(const ProblemConstants& consts, std::size_t m);

double gamma_threshold(const ProblemConstants& consts, std::size_t m, double delta);

// Largest delta meeting both square-root bounds and the open range, so that
// gamma_threshold(delta) <= c / delta.
double delta_range_feasibility(const ProblemConstants& consts, std::size_t m, double c);

double strong_budget(const ProblemConstants& consts, double delta0);  // 2 mu_f alpha_min delta0
double gap_budget(const ProblemConstants& consts, double delta0);     // 4 alpha_min delta0

// delta: half the largest admissible value for the budget; gamma:
// min(cap, sqrt(Gamma cap)) with cap = budget / delta.
PenaltyParams params_for_budget(const ProblemConstants& consts, std::size_t m, double budget);
PenaltyParams params_for_feasibility(const ProblemConstants& consts, std::size_t m);
PenaltyParams params_for_accuracy_strong(const ProblemConstants& consts, std::size_t m, double delta0);
PenaltyParams params_for_accuracy_gap(const ProblemConstants& consts, std::size_t m, double delta0);

// Throws naming the first violated inequality among: delta admissible,
// Gamma <= gamma, gamma delta <= budget.
void check_penalty_params(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp, double budget);

// f(x_hat) + gamma delta / (4 alpha_min); x_hat must be feasible.
double level_value(const Objective& obj, const Polyhedron& poly, const ProblemConstants& consts, const Vec& x_hat,
                   const PenaltyParams& pp);

double saga_step_size(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp, bool strongly_convex);
// 1 - mu_f alpha for the strongly convex step alpha.
double saga_rate(const ProblemConstants& consts, std::size_t m, const PenaltyParams& pp);

class Schedule {
 public:
  enum class Kind { Power, Constant };

  double step(std::size_t k) const;
  double gamma(std::size_t k) const;
  double delta(std::size_t k) const;
  PenaltyParams penalty(std::size_t k) const { return {gamma(k), delta(k)}; }

  Kind kind() const { return kind_; }
  double eps_exp() const { return eps_exp_; }
  double b_exp() const { return b_exp_; }

  friend Schedule make_schedule(double eps_exp, double b_exp);
  friend Schedule make_constant_schedule(double step, const PenaltyParams& pp);

 private:
  Kind kind_ = Kind::Power;
  double eps_exp_ = 0.25;
  double b_exp_ = 1.6;
  double step_ = 0.0;
  PenaltyParams pp_;
};

// s_k = k^-(1/2 + eps), gamma_k = ln(k + 1), delta_k = k^-b, k >= 1.
Schedule make_schedule(double eps_exp, double b_exp);
Schedule make_constant_schedule(double step, const PenaltyParams& pp);

}  // namespace hpen
