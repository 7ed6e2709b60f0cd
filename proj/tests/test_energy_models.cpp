#include <cmath>
#include <vector>

#include <doctest.h>

#include "dgflow/energy_models.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/expression.hpp"
#include "generators.hpp"

using namespace dgflow;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

std::vector<EnergyModel> energies(int dim) {
  return {EnergyModel::quadratic(dim, Eigen::VectorXd::Zero(dim), 1.0),
          EnergyModel::quadratic(dim, Eigen::VectorXd::Constant(dim, 0.3), 2.0),
          EnergyModel::double_well(dim, 1.0),
          EnergyModel::parse(dim, dim == 1 ? "(1 + t)*x^2/2" : "(1 + t)*(x1^2 + x2^2)/2",
                             PowerBound{1.0, 0.0}),
          EnergyModel::parse(dim, dim == 1 ? "exp(x)/2 + exp(-x)/2 + x^4" : "x1^4 + x2^2 + x1*x2")};
}

}  // namespace

TEST_SUITE("energy_models") {

TEST_CASE("expression parser") {
  const auto vars = state_variables(2);
  const double slots[] = {0.5, 2.0, -1.0};
  CHECK(Expression::parse("2*x1^2 - 3*x2 + t", vars).eval(slots) == doctest::Approx(11.5));
  CHECK(Expression::parse("-x1**2", vars).eval(slots) == doctest::Approx(-4.0));
  CHECK(Expression::parse("exp(log(x1)) + sqrt(abs(x2)) + sign(x2)", vars).eval(slots) == doctest::Approx(2.0));
  CHECK(Expression::parse("sin(pi/2) + cos(0) + tan(0) + tanh(0) + e", vars).eval(slots) ==
        doctest::Approx(2.0 + std::exp(1.0)));
  const Expression f = Expression::parse("x1^3*t", vars);
  CHECK(f.derivative(1).eval(slots) == doctest::Approx(3.0 * 4.0 * 0.5));
  CHECK(f.derivative(0).eval(slots) == doctest::Approx(8.0));
  CHECK(f.depends_on(0));
  CHECK_FALSE(f.depends_on(2));
  CHECK(Expression::constant(3.0).is_constant());
  CHECK_THROWS_AS(Expression::parse("x1 +", vars), InputError);
  CHECK_THROWS_AS(Expression::parse("y + 1", vars), InputError);
  CHECK_THROWS_AS(Expression::parse("foo(x1)", vars), InputError);
}

TEST_CASE("energy evaluation examples") {
  const auto q = EnergyModel::quadratic(1, Eigen::VectorXd::Zero(1), 1.0);
  const auto dw = EnergyModel::double_well(1, 1.0);
  CHECK(q.eval(0.0, v1(0.0)) == 0.0);
  CHECK(dw.eval(0.0, v1(1.0)) == doctest::Approx(0.0));
  CHECK(dw.eval(0.0, v1(0.0)) == doctest::Approx(0.25));
  CHECK(q.grad(0.0, v1(3.0)).components[0] == doctest::Approx(3.0));
  CHECK(dw.grad(0.0, v1(1.0)).components[0] == doctest::Approx(0.0));
  CHECK(dw.grad(0.0, v1(0.5)).components[0] == doctest::Approx(-0.375));
  CHECK_THROWS_AS(q.eval(0.0, Eigen::VectorXd::Zero(2)), InputError);
}

TEST_CASE("time derivative examples") {
  CHECK(EnergyModel::quadratic(1, Eigen::VectorXd::Zero(1), 1.0).dt(0.3, v1(2.0)) == 0.0);
  const auto growing = EnergyModel::parse(1, "exp(t)*x^2/2", PowerBound{1.0, 0.0});
  CHECK(growing.time_dependent());
  CHECK(growing.dt(0.0, v1(1.0)) == doctest::Approx(0.5));
  const auto linear = EnergyModel::parse(1, "(1 + t)*x^2/2", PowerBound{1.0, 0.0});
  CHECK(linear.dt(1.0, v1(2.0)) == doctest::Approx(2.0));
  CHECK(linear.dt_grad(1.0, v1(2.0))[0] == doctest::Approx(2.0));
}

TEST_CASE("slope examples") {
  const auto q = EnergyModel::quadratic(1, Eigen::VectorXd::Zero(1), 1.0);
  const auto dw = EnergyModel::double_well(1, 1.0);
  CHECK(slope(q, DissipationPotential::quadratic(1), 0.0, v1(2.0)) == doctest::Approx(2.0));
  CHECK(slope(dw, DissipationPotential::quadratic(1), 0.0, v1(1.0)) == doctest::Approx(0.0));
  CHECK(slope(dw, DissipationPotential::power(1, 1.5), 0.0, v1(0.5)) ==
        doctest::Approx(0.017578125).epsilon(1e-12));
}

TEST_CASE("normalization shift makes the energy nonnegative") {
  const auto shifted = EnergyModel::parse(1, "x^2 - 3");
  CHECK(shifted.normalization_shift() == doctest::Approx(-3.0).epsilon(1e-6));
  CHECK(shifted.eval(0.0, v1(0.0)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(shifted.raw(0.0, v1(0.0)) == doctest::Approx(-3.0));
  CHECK(shifted.with_offset(2.0).eval(0.0, v1(1.0)) == doctest::Approx(shifted.eval(0.0, v1(1.0)) + 2.0));
}

TEST_CASE("custom energies without a gradient fall back to finite differences") {
  const auto e = EnergyModel::custom(
      1, [](double, const Eigen::VectorXd& x) { return std::pow(x[0], 4); }, nullptr, nullptr, false);
  CHECK(e.gradient_is_numeric());
  CHECK(e.grad(0.0, v1(1.5)).components[0] == doctest::Approx(4.0 * 1.5 * 1.5 * 1.5).epsilon(1e-6));
}

TEST_CASE("power bound violations are reported") {
  const auto fast = EnergyModel::parse(1, "exp(5*t)*x^2/2", PowerBound{1.0, 0.0});
  CHECK_FALSE(fast.power_bound_holds(0.0, v1(1.0)));
  CHECK_THROWS_AS(check_power_bound(fast, 100, 3, 1.0, 2.0), PowerBoundViolation);
  CHECK_NOTHROW(check_power_bound(EnergyModel::parse(1, "(1 + t)*x^2/2", PowerBound{1.0, 0.0}), 100, 3, 1.0, 2.0));
  const auto unbounded = EnergyModel::parse(1, "(1 + t)*x^2");
  CHECK_FALSE(unbounded.power_bound_holds(0.5, v1(1.0)));
}

TEST_CASE("friction fields") {
  const auto f = FrictionField::parse(1, "1 + 0.5*sin(x)", 0.5, 1.5);
  CHECK(f.value(0.0, v1(M_PI / 2)) == doctest::Approx(1.5));
  CHECK(f.grad_x(0.0, v1(0.0))[0] == doctest::Approx(0.5));
  CHECK_NOTHROW(f.check_bounds(1.0, v1(-3.0), v1(3.0)));
  const auto bad = FrictionField::parse(1, "x", 0.5, 1.5);
  CHECK_THROWS_AS(bad.check_bounds(1.0, v1(-3.0), v1(3.0)), InputError);
  CHECK(FrictionField::constant(2, 2.0).value(0.0, Eigen::VectorXd::Zero(2)) == 2.0);
}

TEST_CASE("property: analytic gradients match finite differences") {
  for (int dim : {1, 2})
    for (const auto& e : energies(dim)) CHECK(max_gradient_error(e, 50, 21, 1.0, 2.0) <= 1e-5);
}

TEST_CASE("property: slope is nonnegative and energies are normalized") {
  gen::Gen g(22);
  const std::vector<DissipationPotential> pots{DissipationPotential::quadratic(1),
                                               DissipationPotential::power(1, 1.5),
                                               DissipationPotential::power(1, 4.0)};
  for (const auto& e : energies(1)) {
    for (int i = 0; i < 200; ++i) {
      const double t = g.uniform(0.0, 1.0);
      const Eigen::VectorXd x = g.vector(1, -3.0, 3.0);
      CHECK(e.eval(t, x) >= -1e-9);
      for (const auto& pot : pots) CHECK(slope(e, pot, t, x) >= 0.0);
    }
  }
}

TEST_CASE("property: power bound on sampled points") {
  const auto e = EnergyModel::parse(1, "(1 + t)*x^2/2", PowerBound{1.0, 0.0});
  gen::Gen g(23);
  for (int i = 0; i < 100; ++i) CHECK(e.power_bound_holds(g.uniform(0.0, 1.0), g.vector(1, -4.0, 4.0)));
}

}  // TEST_SUITE
