#pragma once

#include <cstddef>

#include "hpen/problem.hpp"

namespace hpen {

struct ProjectionResult {
  Vec point;
  double distance = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

ProjectionResult project_halfspace(const Vec& x, const LinearConstraint& c);

// Dykstra's alternating projections over the halfspaces of poly. Converged
// when one full cycle moves both the iterate and the correction terms by at
// most tol and the largest violation is at most 10 tol.
ProjectionResult project_polyhedron(const Vec& x, const Polyhedron& poly, double tol = 1e-10,
                                    std::size_t max_iter = 100000);

// Projection onto {x : <a_i, x> - b_i <= -delta for all i}.
ProjectionResult project_shrunk(const Vec& x, const Polyhedron& poly, double delta, double tol = 1e-10,
                                std::size_t max_iter = 100000);

// max_i max(<a_i, x> - b_i, 0)
double feasibility_residual(const Vec& x, const Polyhedron& poly);

}  // namespace hpen
