#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hpen/linalg.hpp"

namespace hpen {

// <a, x> - b <= 0
struct LinearConstraint {
  Vec a;
  double b = 0.0;
};

class Polyhedron {
 public:
  explicit Polyhedron(std::vector<LinearConstraint> constraints);

  std::size_t m() const { return constraints_.size(); }
  Eigen::Index n() const { return n_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const LinearConstraint& operator[](std::size_t i) const { return constraints_[i]; }

  // Row i of A is a_i.
  const RowMat& A() const { return a_; }
  const Vec& b() const { return b_; }
  const Vec& norms() const { return norms_; }
  double alpha_min() const { return alpha_min_; }
  double alpha_max() const { return alpha_max_; }

  // Every b_i replaced by b_i - delta.
  Polyhedron shrunk(double delta) const;

 private:
  std::vector<LinearConstraint> constraints_;
  Eigen::Index n_ = 0;
  RowMat a_;
  Vec b_;
  Vec norms_;
  double alpha_min_ = 0.0;
  double alpha_max_ = 0.0;
};

struct CurvatureBounds {
  double mu_f = 0.0;
  double L_f = 0.0;
};

// Value/gradient oracle for a convex objective.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual void gradient(const Vec& x, Vec& out) const = 0;
  virtual std::optional<CurvatureBounds> curvature() const { return std::nullopt; }

  Vec gradient(const Vec& x) const {
    Vec g(dim());
    gradient(x, g);
    return g;
  }
};

// f(x) = ||Phi x - x0||^2
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Mat phi, Vec x0);

  const Mat& Phi() const { return phi_; }
  const Vec& x0() const { return x0_; }
  Eigen::Index l() const { return phi_.rows(); }

  Eigen::Index dim() const override { return phi_.cols(); }
  double value(const Vec& x) const override;
  void gradient(const Vec& x, Vec& out) const override;
  std::optional<CurvatureBounds> curvature() const override { return bounds_; }
  using Objective::gradient;

 private:
  Mat phi_;
  Vec x0_;
  CurvatureBounds bounds_;
};

struct SlaterCertificate {
  Vec point;
  double margin = 0.0;
};

double objective_value(const Objective& obj, const Vec& x);
Vec objective_gradient(const Objective& obj, const Vec& x);
CurvatureBounds curvature_bounds(const QuadraticObjective& obj);
CurvatureBounds curvature_bounds_of(const Mat& phi);

// -max_j (<a_j, x> - b_j)
double slater_margin(const Polyhedron& poly, const Vec& x);
SlaterCertificate make_slater_certificate(const Polyhedron& poly, const Vec& x);

void require_dim(const Vec& x, Eigen::Index n, const char* what);

}  // namespace hpen
