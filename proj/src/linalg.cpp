#include "hpen/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hpen {

namespace {

double off_diagonal_norm(const Mat& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Mat& s, double tol, int max_sweeps) {
  const Eigen::Index n = s.rows();
  Mat a = 0.5 * (s + s.transpose());
  Mat v = Mat::Identity(n, n);
  SymmetricEigen out;
  const double scale = a.norm();
  if (n == 0 || scale == 0.0) {
    out.values = Vec::Zero(n);
    out.vectors = v;
    out.converged = true;
    return out;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol * scale) {
      out.converged = true;
      break;
    }
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  if (!out.converged) out.converged = off_diagonal_norm(a) <= tol * scale;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = a(order[j], order[j]);
    out.vectors.col(j) = v.col(order[j]);
  }
  return out;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

void tree_reduce_columns(Mat& partials) {
  Eigen::Index count = partials.cols();
  while (count > 1) {
    const Eigen::Index half = count / 2;
    for (Eigen::Index j = 0; j < half; ++j) partials.col(j) = partials.col(2 * j) + partials.col(2 * j + 1);
    if (count % 2 == 1) partials.col(half) = partials.col(count - 1);
    count = half + count % 2;
  }
}

}  // namespace hpen
