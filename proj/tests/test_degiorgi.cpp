#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "dgflow/degiorgi.hpp"
#include "dgflow/errors.hpp"
#include "fixtures.hpp"
#include "generators.hpp"

using namespace dgflow;
using fx::v1;

namespace {

Trajectory exact_quadratic(int N) {
  return Trajectory::sample([](double t) { return v1(std::exp(-t)); }, 1.0, N);
}

double relative_fd_error(const DeGiorgiParams& params, const Trajectory& traj) {
  Eigen::VectorXd grad;
  evaluate_J(params, traj, grad);
  const Eigen::VectorXd flat = traj.free_nodes();
  Eigen::VectorXd fd(flat.size());
  Trajectory work = traj;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(flat[i]));
    Eigen::VectorXd p = flat;
    p[i] += h;
    work.set_free_nodes(p);
    const double up = evaluate_J(params, work);
    p[i] -= 2.0 * h;
    work.set_free_nodes(p);
    const double down = evaluate_J(params, work);
    fd[i] = (up - down) / (2.0 * h);
  }
  return (grad - fd).norm() / std::max(grad.norm(), 1e-8);
}

}  // namespace

TEST_SUITE("degiorgi_functional") {

TEST_CASE("trajectory basics") {
  const Trajectory c = Trajectory::constant(v1(2.0), 1.0, 4);
  CHECK(c.N() == 4);
  CHECK(c.tau() == doctest::Approx(0.25));
  CHECK(c.path_length() == 0.0);
  const Trajectory lin = Trajectory::sample([](double t) { return v1(t); }, 1.0, 4);
  CHECK(lin.at(0.375)[0] == doctest::Approx(0.375));
  CHECK(lin.path_length() == doctest::Approx(1.0));
  CHECK(lin.sup_distance(c) == doctest::Approx(2.0));
  CHECK_THROWS_AS(Trajectory(1.0, Eigen::MatrixXd::Zero(2, 1)), InputError);
}

TEST_CASE("parameter validation") {
  const auto td = fx::time_dependent();
  CHECK(td.min_weight() == 1.0);
  CHECK_THROWS_AS(td.with_a(0.5), InputError);
  CHECK_NOTHROW(td.with_a(1.0));
  CHECK_THROWS_AS(DeGiorgiParams(0.0, fx::half_square(), DissipationPotential::quadratic(1), v1(1.0), -1.0, 10),
                  InputError);
  CHECK_THROWS_AS(DeGiorgiParams(-1.0, fx::half_square(), DissipationPotential::quadratic(1), v1(1.0), 1.0, 10),
                  InputError);
  CHECK_THROWS_AS(DeGiorgiParams(2.0, EnergyModel::parse(1, "(1 + t)*x^2"),
                                 DissipationPotential::quadratic(1), v1(1.0), 1.0, 10),
                  InputError);
  CHECK_THROWS_AS(evaluate_J(fx::quadratic(200), Trajectory::constant(v1(1.0), 1.0, 100)), InputError);
}

TEST_CASE("constant trajectory at the minimizer has J = 0 for every weight") {
  for (double a : {0.0, 1.0, 2.5}) {
    const auto p = fx::stationary().with_a(a);
    CHECK(evaluate_J(p, Trajectory::constant(p.x0, p.T, p.N)) == 0.0);
  }
}

TEST_CASE("exact quadratic flow") {
  const auto p = fx::quadratic(200);
  const double J = evaluate_J(p, exact_quadratic(200));
  CHECK(J >= 0.0);
  CHECK(J <= 2e-4);
  // independent midpoint-rule evaluation
  CHECK(J == doctest::Approx(9.381337937389156e-13).epsilon(1e-3));
  double rmax = 0.0;
  for (double r : residual_profile(p, exact_quadratic(200))) rmax = std::max(rmax, r);
  CHECK(rmax <= 5e-3);
  CHECK(rmax == doctest::Approx(2.159317977966474e-12).epsilon(1e-3));
}

TEST_CASE("constant trajectory away from the minimizer") {
  const auto p = fx::quadratic(200);
  const Trajectory c = Trajectory::constant(p.x0, p.T, p.N);
  CHECK(evaluate_J(p, c) == doctest::Approx(0.5).epsilon(1e-14));
  for (double r : residual_profile(p, c)) CHECK(r == doctest::Approx(0.5));
  const JReport rep = j_report(p, c);
  CHECK(rep.value == doctest::Approx(0.5));
  CHECK(rep.per_step_residual_max == doctest::Approx(0.5));
  CHECK(rep.quadrature_N == 200);
}

TEST_CASE("infinite dissipation propagates") {
  const DeGiorgiParams p(0.0, fx::half_square(), DissipationPotential::entropy(1), v1(1.0), 1.0, 10);
  const Trajectory down = Trajectory::sample([](double t) { return v1(1.0 - 0.5 * t); }, 1.0, 10);
  CHECK(std::isinf(evaluate_J(p, down)));
  const Trajectory up = Trajectory::sample([](double t) { return v1(1.0 + 0.5 * t); }, 1.0, 10);
  CHECK(std::isfinite(evaluate_J(p, up)));
}

TEST_CASE("shift invariance") {
  gen::Gen g(31);
  const auto p0 = fx::quadratic(200);
  const Trajectory traj = g.smooth_trajectory(p0.x0, p0.T, p0.N, 0.4);
  const ShiftReport r0 = shift_invariance_check(p0, traj, 2.0, 3.0);
  CHECK(r0.potential_shift_difference <= 1e-10);
  CHECK(r0.energy_shift_difference <= 1e-10);
  const ShiftReport r1 = shift_invariance_check(p0.with_a(1.0), traj, 2.0, 3.0);
  CHECK(r1.potential_shift_difference <= 1e-10);
  CHECK(r1.energy_shift_difference <= 1e-4);
}

TEST_CASE("power bound is checked at quadrature nodes") {
  const auto p = fx::time_dependent();
  CHECK_NOTHROW(check_power_bound_on_nodes(p, Trajectory::constant(p.x0, p.T, p.N)));
  const DeGiorgiParams fast(1.0, EnergyModel::parse(1, "exp(5*t)*x^2/2", PowerBound{1.0, 0.0}),
                            DissipationPotential::quadratic(1), v1(1.0), 1.0, 20);
  CHECK_THROWS_AS(check_power_bound_on_nodes(fast, Trajectory::constant(fast.x0, fast.T, fast.N)),
                  PowerBoundViolation);
}

TEST_CASE("refinement: quadrature error decays at least at first order") {
  std::vector<double> values;
  for (int N : {50, 100, 200, 400}) values.push_back(evaluate_J(fx::quadratic(N), exact_quadratic(N)));
  // independent midpoint-rule values
  CHECK(values[0] == doctest::Approx(2.40173491337925e-10).epsilon(1e-3));
  CHECK(values[3] == doctest::Approx(5.862503408074482e-14).epsilon(1e-2));
  for (std::size_t i = 0; i + 1 < values.size(); ++i) CHECK(values[i] / values[i + 1] >= 1.5);
}

TEST_CASE("property: analytic gradient matches finite differences") {
  gen::Gen g(32);
  for (const auto& [name, params] : fx::builtins()) {
    CAPTURE(name);
    const auto p = params.with_N(50);
    int tested = 0;
    while (tested < 20) {
      const Trajectory traj = g.smooth_trajectory(p.x0, p.T, p.N, 0.5);
      // central differences are unreliable where |v|^p with p < 2 loses its second derivative
      const Eigen::MatrixXd steps = traj.nodes().bottomRows(p.N) - traj.nodes().topRows(p.N);
      if (steps.cwiseAbs().minCoeff() / p.tau() < 0.05) continue;
      CHECK(relative_fd_error(p, traj) <= 1e-5);
      ++tested;
    }
  }
}

TEST_CASE("property: J is nonnegative up to quadrature error") {
  gen::Gen g(33);
  for (const auto& [name, p] : fx::builtins()) {
    CAPTURE(name);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
      const double sigma = g.uniform(0.0, 1.0);
      worst = std::min(worst, evaluate_J(p, g.trajectory(p.x0, p.T, p.N, sigma)));
    }
    MESSAGE(name << ": smallest J over 1e4 random trajectories " << worst);
    CHECK(worst >= -1e-2);
  }
}

TEST_CASE("property: chain-rule identity on smooth curves") {
  gen::Gen g(34);
  for (const auto& [name, p] : fx::builtins()) {
    CAPTURE(name);
    for (int i = 0; i < 20; ++i) {
      const Trajectory traj = g.smooth_trajectory(p.x0, p.T, p.N, 0.5);
      // J minus the weighted Fenchel gaps telescopes to zero up to quadrature error
      CHECK(std::abs(evaluate_J(p, traj) - weighted_residual_sum(p, traj)) <= 5e-2);
    }
  }
}

TEST_CASE("property: Fenchel residuals are nonnegative") {
  gen::Gen g(35);
  for (const auto& [name, p] : fx::builtins()) {
    CAPTURE(name);
    for (int i = 0; i < 50; ++i)
      for (double r : residual_profile(p, g.trajectory(p.x0, p.T, p.N, 0.5))) CHECK(r >= -1e-10);
  }
}

}  // TEST_SUITE
