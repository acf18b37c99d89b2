#include "hpen/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hpen {

void require_dim(const Vec& x, Eigen::Index n, const char* what) {
  if (x.size() != n)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(x.size()) + ", expected " + std::to_string(n) + ")");
}

Polyhedron::Polyhedron(std::vector<LinearConstraint> constraints) : constraints_(std::move(constraints)) {
  if (constraints_.empty()) throw std::invalid_argument("Polyhedron: at least one constraint required");
  n_ = constraints_.front().a.size();
  if (n_ == 0) throw std::invalid_argument("Polyhedron: zero-dimensional constraint");
  const auto m = static_cast<Eigen::Index>(constraints_.size());
  a_.resize(m, n_);
  b_.resize(m);
  norms_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = constraints_[static_cast<std::size_t>(i)];
    require_dim(c.a, n_, "Polyhedron");
    const double nrm = c.a.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw std::invalid_argument("Polyhedron: constraint " + std::to_string(i) + " has a zero or non-finite normal");
    if (!std::isfinite(c.b)) throw std::invalid_argument("Polyhedron: non-finite b");
    a_.row(i) = c.a.transpose();
    b_(i) = c.b;
    norms_(i) = nrm;
  }
  alpha_min_ = norms_.minCoeff();
  alpha_max_ = norms_.maxCoeff();
}

Polyhedron Polyhedron::shrunk(double delta) const {
  std::vector<LinearConstraint> cs = constraints_;
  for (auto& c : cs) c.b -= delta;
  return Polyhedron(std::move(cs));
}

QuadraticObjective::QuadraticObjective(Mat phi, Vec x0) : phi_(std::move(phi)), x0_(std::move(x0)) {
  if (phi_.rows() == 0 || phi_.cols() == 0) throw std::invalid_argument("QuadraticObjective: empty Phi");
  if (x0_.size() != phi_.rows()) throw std::invalid_argument("QuadraticObjective: x0 must have l entries");
  bounds_ = curvature_bounds_of(phi_);
}

double QuadraticObjective::value(const Vec& x) const {
  require_dim(x, dim(), "objective_value");
  return (phi_ * x - x0_).squaredNorm();
}

void QuadraticObjective::gradient(const Vec& x, Vec& out) const {
  require_dim(x, dim(), "objective_gradient");
  out.noalias() = 2.0 * (phi_.transpose() * (phi_ * x - x0_));
}

double objective_value(const Objective& obj, const Vec& x) { return obj.value(x); }

Vec objective_gradient(const Objective& obj, const Vec& x) { return obj.gradient(x); }

CurvatureBounds curvature_bounds_of(const Mat& phi) {
  const Mat gram = phi.transpose() * phi;
  const SymmetricEigen eig = jacobi_eigen(gram);
  const double lmax = std::max(eig.values(eig.values.size() - 1), 0.0);
  double lmin = eig.values(0);
  const double floor = static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon() * lmax;
  if (lmin <= floor) lmin = 0.0;
  return {2.0 * lmin, 2.0 * lmax};
}

CurvatureBounds curvature_bounds(const QuadraticObjective& obj) { return *obj.curvature(); }

double slater_margin(const Polyhedron& poly, const Vec& x) {
  require_dim(x, poly.n(), "slater_margin");
  return -(poly.A() * x - poly.b()).maxCoeff();
}

SlaterCertificate make_slater_certificate(const Polyhedron& poly, const Vec& x) {
  const double eps = slater_margin(poly, x);
  if (!(eps > 0.0)) throw std::invalid_argument("make_slater_certificate: point is not strictly feasible");
  return {x, eps};
}

}  // namespace hpen
