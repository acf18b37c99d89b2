#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hpen/geometry.hpp"
#include "hpen/solvers.hpp"

namespace hpen {

namespace {

Vec solve_passive(const Mat& E, const Vec& f, const std::vector<char>& passive, std::vector<Eigen::Index>& idx) {
  idx.clear();
  for (Eigen::Index j = 0; j < E.cols(); ++j)
    if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
  Mat sub(E.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = E.col(idx[k]);
  const Vec zs = sub.colPivHouseholderQr().solve(f);
  Vec z = Vec::Zero(E.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zs(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsResult nnls(const Mat& E, const Vec& f, std::size_t max_iter) {
  const Eigen::Index n = E.cols();
  if (f.size() != E.rows()) throw std::invalid_argument("nnls: dimension mismatch");
  if (max_iter == 0) max_iter = 3 * static_cast<std::size_t>(n) + 30;
  NnlsResult res;
  res.u = Vec::Zero(n);
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> idx;
  const double col_scale = E.colwise().norm().maxCoeff();
  const double tol = 1e-13 * col_scale * std::max(f.norm(), std::numeric_limits<double>::min());

  Vec w = E.transpose() * (f - E * res.u);
  while (res.iterations < max_iter) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!passive[sj] && !blocked[sj] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    passive[static_cast<std::size_t>(t)] = 1;
    for (;;) {
      const Vec z = solve_passive(E, f, passive, idx);
      bool positive = true;
      for (Eigen::Index j : idx)
        if (z(j) <= 0.0) positive = false;
      if (positive) {
        res.u = z;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index j : idx) {
        if (z(j) > 0.0) continue;
        const double a = res.u(j) / (res.u(j) - z(j));
        if (a < alpha) {
          alpha = a;
          blocking = j;
        }
      }
      res.u += alpha * (z - res.u);
      res.u(blocking) = 0.0;
      for (Eigen::Index j : idx) {
        if (res.u(j) <= 0.0) {
          res.u(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = 0;
        }
      }
    }
    if (!passive[static_cast<std::size_t>(t)]) {
      blocked[static_cast<std::size_t>(t)] = 1;
    } else {
      std::fill(blocked.begin(), blocked.end(), 0);
    }
    w = E.transpose() * (f - E * res.u);
  }
  res.residual = (E * res.u - f).norm();
  return res;
}

namespace {

// min ||z|| subject to G z >= h.
Vec least_distance(const Mat& G, const Vec& h, std::vector<char>& active) {
  const Eigen::Index m = G.rows();
  const Eigen::Index n = G.cols();
  Mat E(n + 1, m);
  E.topRows(n) = G.transpose();
  E.row(n) = h.transpose();
  Vec f = Vec::Zero(n + 1);
  f(n) = 1.0;
  const NnlsResult r = nnls(E, f);
  if (!r.converged) throw std::runtime_error("reference solver: NNLS did not converge");
  const Vec resid = E * r.u - f;
  if (!(resid.norm() > 1e-12) || resid(n) == 0.0) throw std::runtime_error("reference solver: constraints infeasible");
  active.assign(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) active[static_cast<std::size_t>(i)] = r.u(i) > 0.0;
  return -resid.head(n) / resid(n);
}

Vec polish(const QuadraticObjective& obj, const Polyhedron& poly, const std::vector<char>& active) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) idx.push_back(static_cast<Eigen::Index>(i));
  const Eigen::Index n = obj.dim();
  const auto p = static_cast<Eigen::Index>(idx.size());
  Mat K = Mat::Zero(n + p, n + p);
  Vec rhs(n + p);
  K.topLeftCorner(n, n) = 2.0 * obj.Phi().transpose() * obj.Phi();
  rhs.head(n) = 2.0 * obj.Phi().transpose() * obj.x0();
  for (Eigen::Index k = 0; k < p; ++k) {
    K.block(0, n + k, n, 1) = poly.A().row(idx[static_cast<std::size_t>(k)]).transpose();
    K.block(n + k, 0, 1, n) = poly.A().row(idx[static_cast<std::size_t>(k)]);
    rhs(n + k) = poly.b()(idx[static_cast<std::size_t>(k)]);
  }
  return K.completeOrthogonalDecomposition().solve(rhs).head(n);
}

}  // namespace

Vec solve_reference(const QuadraticObjective& obj, const Polyhedron& poly, const Vec& x_start, double tol) {
  require_dim(x_start, poly.n(), "solve_reference");
  const Eigen::Index n = obj.dim();
  if (obj.l() < n) return solve_reference_projected(obj, poly, x_start, tol);
  Eigen::HouseholderQR<Mat> qr(obj.Phi());
  const Mat R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Vec diag = R.diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-12 * diag.maxCoeff())) return solve_reference_projected(obj, poly, x_start, tol);

  const Vec d = (qr.householderQ().transpose() * obj.x0()).head(n);
  // M = A R^{-1}, rows normalized so every constraint has unit scale.
  Mat M = R.transpose().triangularView<Eigen::Lower>().solve(Mat(poly.A().transpose())).transpose();
  Vec h = M * d - poly.b();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double s = M.row(i).norm();
    M.row(i) /= s;
    h(i) /= s;
  }
  std::vector<char> active;
  const Vec z = least_distance(-M, h, active);
  const Vec x_ldp = R.triangularView<Eigen::Upper>().solve(z + d);

  const double feas_ldp = feasibility_residual(x_ldp, poly);
  const double f_ldp = obj.value(x_ldp);
  Vec x = x_ldp;
  const Vec x_pol = polish(obj, poly, active);
  if (x_pol.allFinite()) {
    const double scale = 1e-14 * (1.0 + poly.b().cwiseAbs().maxCoeff());
    const double feas_pol = feasibility_residual(x_pol, poly);
    const double f_pol = obj.value(x_pol);
    if (feas_pol <= std::max(feas_ldp, scale) && std::abs(f_pol - f_ldp) <= 1e-9 * (1.0 + std::abs(f_ldp))) x = x_pol;
  }
  if (!(feasibility_residual(x, poly) <= 1e-9))
    throw std::runtime_error("reference solver: solution violates constraints by more than 1e-9");
  return x;
}

Vec solve_reference_projected(const Objective& obj, const Polyhedron& poly, const Vec& x_start, double tol,
                              std::size_t max_iter) {
  require_dim(x_start, poly.n(), "solve_reference_projected");
  const auto curv = obj.curvature();
  const double L = curv && curv->L_f > 0.0 ? curv->L_f : 1.0;
  const double ptol = std::min(1e-10, 0.1 * tol);
  Vec x = project_polyhedron(x_start, poly, ptol).point;
  Vec g(poly.n());
  for (std::size_t t = 0; t < max_iter; ++t) {
    obj.gradient(x, g);
    const ProjectionResult pr = project_polyhedron(x - g / L, poly, ptol);
    const double change = (pr.point - x).norm();
    x = pr.point;
    if (change <= tol) return x;
  }
  throw std::runtime_error("reference solver: projected gradient did not converge");
}

}  // namespace hpen
