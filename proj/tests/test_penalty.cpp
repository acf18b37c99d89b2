#include <doctest.h>

#include <cstring>
#include <random>

#include "hpen/experiments.hpp"
#include "hpen/penalty.hpp"

using namespace hpen;

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("p_delta branches") {
  CHECK(p_delta(2, 1) == 2.0);
  CHECK(p_delta(-1, 1) == 0.0);
  CHECK(p_delta(0, 1) == 0.25);
  CHECK(p_delta(1, 1) == 1.0);
  CHECK(p_delta(-3, 1) == 0.0);
  CHECK(p_delta(0.3, 0) == 0.3);
  CHECK(p_delta(-0.3, 0) == 0.0);
  CHECK_THROWS_AS(p_delta(0, -1), std::invalid_argument);
}

TEST_CASE("p_delta derivative") {
  CHECK(p_delta_prime(0, 1) == 0.5);
  CHECK(p_delta_prime(5, 1) == 1.0);
  CHECK(p_delta_prime(-5, 1) == 0.0);
  CHECK(p_delta_prime(0.25, 0.5) == 0.75);
  CHECK(p_delta_prime(1, 1) == 1.0);
  CHECK(p_delta_prime(-1, 1) == 0.0);
  CHECK_THROWS_AS(p_delta_prime(0, 0), std::invalid_argument);
}

TEST_CASE("h_delta examples") {
  const LinearConstraint c{scalar(1), 1.0};
  CHECK(h_delta(scalar(0), c, 1) == 0.0);
  CHECK(h_delta(scalar(2), c, 1) == 1.0);
  CHECK(h_delta(scalar(2), c, 0) == 1.0);
  CHECK(h_delta(v2(6, 8), {v2(3, 4), 10.0}, 0) == 8.0);
}

TEST_CASE("h_delta gradient") {
  const LinearConstraint c{v2(3, 4), 10.0};
  CHECK(h_delta_grad(v2(0, 0), c, 1).norm() == 0.0);
  const Vec far = h_delta_grad(v2(6, 8), c, 1);
  CHECK(far.norm() == doctest::Approx(1.0));
  CHECK(far(0) == doctest::Approx(0.6));
  CHECK(h_delta_grad(scalar(1), {scalar(1), 1.0}, 1)(0) == 0.5);
  CHECK(h_delta_grad_lipschitz(c, 0.5) == 5.0);
  CHECK_THROWS_AS(h_delta_grad(v2(0, 0), c, 0), std::invalid_argument);
}

TEST_CASE("penalized value and gradient on the 1D example") {
  const QuadraticObjective f(Mat::Identity(1, 1), Vec::Zero(1));
  const Polyhedron poly({{scalar(1), 0.0}});
  const PenaltyParams pp{1.0, 1.0};
  CHECK(penalized_value(f, poly, pp, scalar(0)) == 0.25);
  CHECK(penalized_grad(f, poly, pp, scalar(0))(0) == 0.5);
}

TEST_CASE("deep interior and far outside") {
  const QuadraticObjective f(Mat::Identity(2, 2), v2(1, -1));
  const Polyhedron poly({{v2(1, 0), 5.0}, {v2(0, 1), 5.0}});
  const PenaltyParams pp{7.0, 0.1};
  const Vec x = v2(0.5, 0.5);
  CHECK(penalized_value(f, poly, pp, x) == f.value(x));
  CHECK(penalized_grad(f, poly, pp, x) == f.gradient(x));

  const QuadraticObjective zero(Mat::Zero(1, 2), Vec::Zero(1));
  const Polyhedron single({{v2(3, 4), 0.0}});
  const Vec g = penalized_grad(zero, single, pp, v2(10, 10));
  CHECK(g(0) == doctest::Approx(7.0 * 0.6));
  CHECK(g(1) == doctest::Approx(7.0 * 0.8));
}

TEST_CASE("feasible points stay below the level bound") {
  const auto inst = generate_regression_instance(5, 5, 40, 2);
  const PenaltyParams pp{3.0, 0.05};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 0.01);
  for (int t = 0; t < 200; ++t) {
    Vec x(5);
    for (auto& v : x) v = nd(rng);
    if (slater_margin(inst.poly, x) < 0.0) continue;
    CHECK(penalized_value(inst.obj, inst.poly, pp, x) <=
          inst.obj.value(x) + pp.gamma * pp.delta / (4.0 * inst.poly.alpha_min()));
  }
}

TEST_CASE("component gradients average to the penalized gradient") {
  const auto inst = generate_regression_instance(8, 8, 130, 4);
  const PenaltyParams pp{50.0, 0.5};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 0.2);
  for (int t = 0; t < 20; ++t) {
    Vec x(8);
    for (auto& v : x) v = nd(rng);
    Vec avg = Vec::Zero(8);
    for (std::size_t i = 0; i < inst.poly.m(); ++i) avg += component_grad(inst.obj, inst.poly, pp, i, x);
    avg /= static_cast<double>(inst.poly.m());
    const Vec g = penalized_grad(inst.obj, inst.poly, pp, x);
    for (Eigen::Index j = 0; j < 8; ++j) CHECK(std::abs(avg(j) - g(j)) <= 1e-12 * std::max(1.0, std::abs(g(j))));
  }
  const Polyhedron one({inst.poly[0]});
  const Vec x = Vec::Constant(8, 0.3);
  CHECK(bitwise_equal(component_grad(inst.obj, one, pp, 0, x), penalized_grad(inst.obj, one, pp, x)));
  CHECK_THROWS_AS(component_grad(inst.obj, inst.poly, pp, inst.poly.m(), x), std::out_of_range);
}

TEST_CASE("parallel constraint sum is bitwise equal to the serial reference") {
  for (std::size_t m : {1u, 63u, 64u, 65u, 300u, 1000u}) {
    const auto inst = generate_regression_instance(12, 12, m, m);
    const PenaltyParams pp{100.0, 1e-2};
    Vec x = Vec::LinSpaced(12, -0.5, 0.5);
    CHECK(bitwise_equal(penalized_grad(inst.obj, inst.poly, pp, x), penalized_grad_serial(inst.obj, inst.poly, pp, x)));
  }
}

TEST_CASE("penalized Lipschitz constant bounds gradient differences") {
  const auto inst = generate_regression_instance(6, 6, 30, 5);
  const PenaltyParams pp{20.0, 0.01};
  const double L = penalized_lipschitz(inst.obj.curvature()->L_f, inst.poly, pp);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int t = 0; t < 500; ++t) {
    Vec x(6), y(6);
    for (auto& v : x) v = nd(rng);
    for (auto& v : y) v = nd(rng);
    const double ratio =
        (penalized_grad(inst.obj, inst.poly, pp, x) - penalized_grad(inst.obj, inst.poly, pp, y)).norm() /
        (x - y).norm();
    CHECK(ratio <= L * (1.0 + 1e-12));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate_penalty({0.0, 1.0}, false), std::invalid_argument);
  CHECK_THROWS_AS(validate_penalty({1.0, -1.0}, false), std::invalid_argument);
  CHECK_NOTHROW(validate_penalty({1.0, 0.0}, false));
  CHECK_THROWS_AS(validate_penalty({1.0, 0.0}, true), std::invalid_argument);
}
