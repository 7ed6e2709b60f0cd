#include <cmath>

#include <doctest.h>

#include "dgflow/pipeline.hpp"
#include "dgflow/trajectory_solver.hpp"
#include "fixtures.hpp"

using namespace dgflow;

namespace {

double sup_to(const Trajectory& traj, double (*exact)(double)) {
  double worst = 0.0;
  for (int k = 0; k <= traj.N(); ++k) worst = std::max(worst, std::abs(traj.node(k)[0] - exact(traj.time(k))));
  return worst;
}

double decay(double t) { return std::exp(-t); }
double power_flow(double t) { return 1.0 / (1.0 + t); }

}  // namespace

TEST_SUITE("trajectory_solver") {

TEST_CASE("quadratic flow from a constant start") {
  const auto p = fx::quadratic(200);
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N));
  CHECK(res.converged);
  CHECK(std::abs(res.value) <= 1e-3);
  CHECK(sup_to(res.trajectory, decay) <= 5e-3);
  const NullMinimumReport rep = verify_null_minimum(p, res);
  CHECK(rep.pass);
  CHECK(rep.max_residual <= 5e-3);
}

TEST_CASE("stationary start stays put") {
  const auto p = fx::stationary(50);
  const Trajectory init = Trajectory::constant(p.x0, p.T, p.N);
  const OptimResult res = minimize_J(p, init);
  CHECK(res.value == 0.0);
  CHECK(res.trajectory.sup_distance(init) == 0.0);
}

TEST_CASE("power dissipation follows 1/(1+t)") {
  const auto p = fx::power(200);
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N));
  CHECK(std::abs(res.value) <= 1e-3);
  CHECK(sup_to(res.trajectory, power_flow) <= 1e-2);
  CHECK(sup_error(res.trajectory, flow_oracle(p)) <= 1e-2);
}

TEST_CASE("minimizing movements") {
  // (1 + tau)^-N for the quadratic energy
  const Trajectory coarse = minimizing_movements(fx::quadratic(10));
  CHECK(coarse.node(10)[0] == doctest::Approx(0.38554328942953175).epsilon(1e-10));
  const Trajectory dw = minimizing_movements(fx::double_well(1.0, 400));
  CHECK(std::abs(dw.node(400)[0] - 1.0) <= 1e-2);
}

TEST_CASE("verify_null_minimum reports every admissible weight") {
  const auto p = fx::quadratic(200);
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N));
  const NullMinimumReport rep = verify_null_minimum(p, res);
  REQUIRE(rep.weighted_values.size() == 3);
  for (const auto& [a, J] : rep.weighted_values) {
    CAPTURE(a);
    CHECK(std::abs(J) <= 1e-3);
  }
  CHECK(rep.eps_quad >= 0.0);

  // inadmissible weights below the power-bound constant are skipped
  const auto td = fx::time_dependent();
  const OptimResult tres = minimize_J(td, Trajectory::constant(td.x0, td.T, td.N));
  const NullMinimumReport trep = verify_null_minimum(td, tres);
  for (const auto& wv : trep.weighted_values) CHECK(wv.first >= td.min_weight());
}

TEST_CASE("truncated run is not certified") {
  const auto p = fx::quadratic(200);
  SolverOptions opts;
  opts.max_iter = 3;
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N), opts);
  CHECK_FALSE(res.converged);
  CHECK(res.value >= 0.1);
  CHECK_FALSE(verify_null_minimum(p, res).pass);
}

TEST_CASE("minimizer does not depend on the weight") {
  const auto p0 = fx::quadratic(200, 0.0);
  const auto p2 = fx::quadratic(200, 2.0);
  const OptimResult r0 = minimize_J(p0, Trajectory::constant(p0.x0, p0.T, p0.N));
  const OptimResult r2 = minimize_J(p2, Trajectory::constant(p2.x0, p2.T, p2.N));
  CHECK(r0.trajectory.sup_distance(r2.trajectory) <= 1e-2);
}

TEST_CASE("direct transcription agrees with minimizing movements") {
  for (const auto& p : {fx::quadratic(100), fx::power(100), fx::friction(100)}) {
    const OptimResult direct = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N));
    CHECK(direct.trajectory.sup_distance(minimizing_movements(p)) <= 5e-2);
  }
}

TEST_CASE("double well with restarts reaches the right well") {
  const auto p = fx::double_well(1.0, 400);
  SolverOptions opts;
  opts.restarts = 5;
  opts.seed = 7;
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N), opts);
  CHECK(std::abs(res.value) <= 1e-3);
  CHECK(std::abs(res.trajectory.node(400)[0] - 1.0) <= 1e-2);
  CHECK(verify_null_minimum(p, res).pass);
}

TEST_CASE("history is monotone") {
  const auto p = fx::friction(200);
  const OptimResult res = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N));
  REQUIRE(res.history.size() >= 2);
  for (std::size_t i = 1; i < res.history.size(); ++i)
    CHECK(res.history[i].value <= res.history[i - 1].value + LbfgsOptions{}.increase_tol);
}

TEST_CASE("restarts are reproducible for a fixed seed") {
  const auto p = fx::double_well(1.0, 100);
  SolverOptions opts;
  opts.restarts = 3;
  opts.seed = 11;
  const OptimResult a = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N), opts);
  const OptimResult b = minimize_J(p, Trajectory::constant(p.x0, p.T, p.N), opts);
  CHECK(a.value == b.value);
  CHECK(a.trajectory.sup_distance(b.trajectory) == 0.0);
}

}  // TEST_SUITE
