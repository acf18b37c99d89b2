#include "hpen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hpen {

ProjectionResult project_halfspace(const Vec& x, const LinearConstraint& c) {
  require_dim(x, c.a.size(), "project_halfspace");
  const double v = c.a.dot(x) - c.b;
  if (v <= 0.0) return {x, 0.0, 0, true};
  const double nrm2 = c.a.squaredNorm();
  return {x - (v / nrm2) * c.a, v / std::sqrt(nrm2), 1, true};
}

double feasibility_residual(const Vec& x, const Polyhedron& poly) {
  require_dim(x, poly.n(), "feasibility_residual");
  return std::max((poly.A() * x - poly.b()).maxCoeff(), 0.0);
}

ProjectionResult project_polyhedron(const Vec& x, const Polyhedron& poly, double tol, std::size_t max_iter) {
  require_dim(x, poly.n(), "project_polyhedron");
  if (!(tol > 0.0)) throw std::invalid_argument("project_polyhedron: tol must be > 0");
  if (poly.m() == 1) return project_halfspace(x, poly[0]);

  const auto m = static_cast<Eigen::Index>(poly.m());
  const RowMat& A = poly.A();
  const Vec& b = poly.b();
  Vec sq(m);
  for (Eigen::Index i = 0; i < m; ++i) sq(i) = poly.norms()(i) * poly.norms()(i);

  RowMat inc = RowMat::Zero(m, poly.n());
  std::vector<char> active(static_cast<std::size_t>(m), 0);
  Vec cur = x;
  Vec prev(poly.n());
  Vec y(poly.n());
  ProjectionResult res;
  res.converged = false;
  for (std::size_t cycle = 1; cycle <= max_iter; ++cycle) {
    prev = cur;
    double inc_change = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool had = active[static_cast<std::size_t>(i)];
      if (had) y = cur + inc.row(i).transpose();
      const double v = had ? A.row(i).dot(y) - b(i) : A.row(i).dot(cur) - b(i);
      if (v > 0.0) {
        if (had) {
          cur = y - (v / sq(i)) * A.row(i).transpose();
        } else {
          y = cur;
          cur -= (v / sq(i)) * A.row(i).transpose();
        }
        const Vec next = y - cur;
        inc_change += (next - inc.row(i).transpose()).squaredNorm();
        inc.row(i) = next.transpose();
        active[static_cast<std::size_t>(i)] = 1;
      } else if (had) {
        cur = y;
        inc_change += inc.row(i).squaredNorm();
        inc.row(i).setZero();
        active[static_cast<std::size_t>(i)] = 0;
      }
    }
    res.iterations = cycle;
    if ((cur - prev).norm() <= tol && std::sqrt(inc_change) <= tol && feasibility_residual(cur, poly) <= 10.0 * tol) {
      res.converged = true;
      break;
    }
  }
  res.point = cur;
  res.distance = (x - cur).norm();
  return res;
}

ProjectionResult project_shrunk(const Vec& x, const Polyhedron& poly, double delta, double tol,
                                std::size_t max_iter) {
  if (!(delta >= 0.0)) throw std::invalid_argument("project_shrunk: delta must be >= 0");
  return project_polyhedron(x, poly.shrunk(delta), tol, max_iter);
}

}  // namespace hpen
