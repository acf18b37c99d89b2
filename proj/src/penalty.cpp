#include "hpen/penalty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpen {

void validate_penalty(const PenaltyParams& pp, bool need_smooth) {
  if (!(pp.gamma > 0.0) || !std::isfinite(pp.gamma)) throw std::invalid_argument("penalty: gamma must be > 0");
  if (!(pp.delta >= 0.0) || !std::isfinite(pp.delta)) throw std::invalid_argument("penalty: delta must be >= 0");
  if (need_smooth && pp.delta == 0.0)
    throw std::invalid_argument("penalty: delta = 0 is not differentiable, gradients need delta > 0");
}

double p_delta(double s, double delta) {
  if (delta < 0.0) throw std::invalid_argument("p_delta: delta must be >= 0");
  if (delta == 0.0) return s > 0.0 ? s : 0.0;
  if (s > delta) return s;
  if (s < -delta) return 0.0;
  const double t = s + delta;
  return 0.25 * t * (t / delta);
}

double p_delta_prime(double s, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("p_delta_prime: delta must be > 0");
  if (s > delta) return 1.0;
  if (s < -delta) return 0.0;
  return (s + delta) / (2.0 * delta);
}

double h_delta(const Vec& x, const LinearConstraint& c, double delta) {
  require_dim(x, c.a.size(), "h_delta");
  return p_delta(c.a.dot(x) - c.b, delta) / c.a.norm();
}

Vec h_delta_grad(const Vec& x, const LinearConstraint& c, double delta) {
  require_dim(x, c.a.size(), "h_delta_grad");
  const double nrm = c.a.norm();
  return (p_delta_prime(c.a.dot(x) - c.b, delta) / nrm) * c.a;
}

double h_delta_grad_lipschitz(const LinearConstraint& c, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("h_delta_grad_lipschitz: delta must be > 0");
  return c.a.norm() / (2.0 * delta);
}

double penalized_value(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x) {
  validate_penalty(pp, false);
  require_dim(x, poly.n(), "penalized_value");
  const std::size_t m = poly.m();
  std::vector<double> h(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    h[i] = p_delta(poly.A().row(r).dot(x) - poly.b()(r), pp.delta) / poly.norms()(r);
  }
  return obj.value(x) + (pp.gamma / static_cast<double>(m)) * pairwise_sum(h.data(), m);
}

namespace {

void chunk_partial(const Polyhedron& poly, double delta, const Vec& x, std::size_t chunk, Eigen::Ref<Vec> out) {
  const std::size_t begin = chunk * kChunkRows;
  const std::size_t end = std::min(poly.m(), begin + kChunkRows);
  out.setZero();
  for (std::size_t i = begin; i < end; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s = poly.A().row(r).dot(x) - poly.b()(r);
    if (s < -delta) continue;
    const double w = (s > delta ? 1.0 : (s + delta) / (2.0 * delta)) / poly.norms()(r);
    out.noalias() += w * poly.A().row(r).transpose();
  }
}

}  // namespace

void penalty_grad_sum(const Polyhedron& poly, double delta, const Vec& x, Vec& out, bool parallel) {
  if (!(delta > 0.0)) throw std::invalid_argument("penalty_grad_sum: delta must be > 0");
  require_dim(x, poly.n(), "penalized_grad");
  const std::size_t chunks = (poly.m() + kChunkRows - 1) / kChunkRows;
  Mat partials(poly.n(), static_cast<Eigen::Index>(chunks));
  const auto nchunks = static_cast<long long>(chunks);
  if (parallel) {
#pragma omp parallel for schedule(static) if (nchunks >= 4)
    for (long long c = 0; c < nchunks; ++c)
      chunk_partial(poly, delta, x, static_cast<std::size_t>(c), partials.col(static_cast<Eigen::Index>(c)));
  } else {
    for (long long c = 0; c < nchunks; ++c)
      chunk_partial(poly, delta, x, static_cast<std::size_t>(c), partials.col(static_cast<Eigen::Index>(c)));
  }
  tree_reduce_columns(partials);
  out = partials.col(0);
}

namespace {

void assemble(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x, Vec& out,
              bool parallel) {
  validate_penalty(pp, true);
  Vec sum;
  penalty_grad_sum(poly, pp.delta, x, sum, parallel);
  obj.gradient(x, out);
  out.noalias() += (pp.gamma / static_cast<double>(poly.m())) * sum;
}

}  // namespace

void penalized_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x, Vec& out) {
  assemble(obj, poly, pp, x, out, true);
}

Vec penalized_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x) {
  Vec out(poly.n());
  assemble(obj, poly, pp, x, out, true);
  return out;
}

Vec penalized_grad_serial(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x) {
  Vec out(poly.n());
  assemble(obj, poly, pp, x, out, false);
  return out;
}

void component_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, std::size_t i, const Vec& x,
                    Vec& out) {
  validate_penalty(pp, true);
  if (i >= poly.m())
    throw std::out_of_range("component_grad: index " + std::to_string(i) + " out of range for m = " +
                            std::to_string(poly.m()));
  require_dim(x, poly.n(), "component_grad");
  const auto r = static_cast<Eigen::Index>(i);
  const double w = p_delta_prime(poly.A().row(r).dot(x) - poly.b()(r), pp.delta) / poly.norms()(r);
  obj.gradient(x, out);
  out.noalias() += (pp.gamma * w) * poly.A().row(r).transpose();
}

Vec component_grad(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, std::size_t i,
                   const Vec& x) {
  Vec out(poly.n());
  component_grad(obj, poly, pp, i, x, out);
  return out;
}

double constraint_curvature(const Polyhedron& poly) {
  const RowMat scaled = poly.norms().cwiseInverse().asDiagonal() * poly.A();
  const Mat m = poly.A().transpose() * scaled;
  const SymmetricEigen eig = jacobi_eigen(m);
  return eig.values(eig.values.size() - 1);
}

double penalized_lipschitz(double L_f, const Polyhedron& poly, const PenaltyParams& pp) {
  validate_penalty(pp, true);
  return L_f + (pp.gamma / static_cast<double>(poly.m())) * constraint_curvature(poly) / (2.0 * pp.delta);
}

}  // namespace hpen
