#pragma once

#include <cstddef>

#include "hpen/problem.hpp"

namespace hpen {

struct PenaltyParams {
  double gamma = 1.0;
  double delta = 0.0;
};

// gamma > 0, delta >= 0; with need_smooth also delta > 0.
void validate_penalty(const PenaltyParams& pp, bool need_smooth);

// s above delta: s; s below -delta: 0; otherwise (s + delta)^2 / (4 delta).
// delta = 0 gives max(s, 0).
double p_delta(double s, double delta);
double p_delta_prime(double s, double delta);

double h_delta(const Vec& x, const LinearConstraint& c, double delta);
Vec h_delta_grad(const Vec& x, const LinearConstraint& c, double delta);
// Lipschitz constant of the gradient of h_delta: ||a|| / (2 delta).
double h_delta_grad_lipschitz(const LinearConstraint& c, double delta);

// f(x) + (gamma/m) sum_i h_delta(x; a_i, b_i)
double penalized_value(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x);

// grad f(x) + (gamma/m) sum_i grad h_delta(x; a_i, b_i).
// The constraint sum runs in OpenMP over fixed row chunks; the serial
// variant walks the same chunks and tree, so both agree bitwise.
Vec penalized_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x);
void penalized_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x, Vec& out);
Vec penalized_grad_serial(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x);

// sum_i grad h_delta(x; a_i, b_i), parallel or serial.
void penalty_grad_sum(const Polyhedron& poly, double delta, const Vec& x, Vec& out, bool parallel);

// grad f(x) + gamma grad h_delta(x; a_i, b_i), zero-based i.
Vec component_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, std::size_t i, const Vec& x);
void component_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, std::size_t i, const Vec& x,
                    Vec& out);

// lambda_max(sum_i a_i a_i^T / ||a_i||)
double constraint_curvature(const Polyhedron& poly);
// L_f + (gamma/m) constraint_curvature / (2 delta), a Lipschitz constant of grad F.
double penalized_lipschitz(double L_f, const Polyhedron& poly, const PenaltyParams& pp);

}  // namespace hpen
