#include "dgflow/trajectory_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "dgflow/errors.hpp"

namespace dgflow {

unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DGFLOW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

namespace {

OptimResult single_run(const DeGiorgiParams& params, const Trajectory& init,
                       const SolverOptions& opts) {
  if (!std::isfinite(evaluate_J(params, init)))
    throw InputError("minimize_J: J(init) is not finite");
  LbfgsOptions lo;
  lo.max_iter = opts.max_iter;
  lo.memory = opts.memory;
  lo.gtol = opts.gtol >= 0.0 ? opts.gtol
                             : 1e-6 * std::sqrt(static_cast<double>(init.dim()) * init.N());
  Trajectory work = init;
  auto objective = [&](const Eigen::VectorXd& flat, Eigen::VectorXd& grad) {
    work.set_free_nodes(flat);
    return evaluate_J(params, work, grad);
  };
  LbfgsResult res = lbfgs_minimize(objective, init.free_nodes(), lo);
  Trajectory out = init;
  out.set_free_nodes(res.x);
  const double value = evaluate_J(params, out);
  return OptimResult{std::move(out), value, res.iterations, res.grad_norm, res.converged,
                     std::move(res.history)};
}

}  // namespace

OptimResult minimize_J(const DeGiorgiParams& params, const Trajectory& init,
                       const SolverOptions& opts) {
  if (init.N() != params.N || init.dim() != params.x0.size())
    throw InputError("minimize_J: init does not match the grid");
  if (opts.restarts <= 1) return single_run(params, init, opts);

  const double sigma = opts.noise_sigma >= 0.0 ? opts.noise_sigma : 0.1 * params.x0.norm() + 0.1;
  const int runs = opts.restarts;
  std::vector<Trajectory> inits;
  for (int r = 0; r < runs; ++r) {
    std::mt19937_64 rng(opts.seed + static_cast<unsigned long>(r));
    std::normal_distribution<double> noise(0.0, sigma);
    Trajectory t = init;
    for (int k = 1; k <= t.N(); ++k)
      for (int i = 0; i < t.dim(); ++i) t.nodes()(k, i) += noise(rng);
    inits.push_back(std::move(t));
  }

  std::vector<std::optional<OptimResult>> results(static_cast<std::size_t>(runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(runs));
  std::mutex mtx;
  int next = 0;
  auto worker = [&] {
    for (;;) {
      int r;
      {
        std::lock_guard lock(mtx);
        if (next >= runs) return;
        r = next++;
      }
      const auto ur = static_cast<std::size_t>(r);
      try {
        results[ur] = single_run(params, inits[ur], opts);
      } catch (...) {
        errors[ur] = std::current_exception();
      }
    }
  };
  const unsigned nthreads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(runs));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  }

  std::optional<OptimResult> best;
  for (auto& r : results) {
    if (!r) continue;
    if (!best || r->value < best->value - 1e-9 ||
        (std::abs(r->value - best->value) <= 1e-9 &&
         r->trajectory.path_length() < best->trajectory.path_length())) {
      best = std::move(r);
    }
  }
  if (!best) std::rethrow_exception(errors.front());
  return std::move(*best);
}

Trajectory minimizing_movements(const DeGiorgiParams& params) {
  const int n = static_cast<int>(params.x0.size());
  const double tau = params.tau();
  Eigen::MatrixXd nodes(params.N + 1, n);
  nodes.row(0) = params.x0.transpose();
  LbfgsOptions lo;
  lo.gtol = 1e-10;
  lo.max_iter = 2000;
  const auto& pot = params.pot;
  const auto& energy = params.energy;
  for (int k = 0; k < params.N; ++k) {
    const Eigen::VectorXd xk = nodes.row(k).transpose();
    const double t1 = (k + 1) * tau;
    const double A = pot.friction_at(t1, xk);
    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
      const Eigen::VectorXd v = (x - xk) / tau;
      const double psi = pot.base_eval(v);
      if (!std::isfinite(psi)) return psi;
      grad = A * pot.base_grad(v) + energy.grad(t1, x).components;
      return tau * (A * psi + pot.shift()) + energy.eval(t1, x);
    };
    LbfgsResult res;
    try {
      res = lbfgs_minimize(objective, xk, lo);
    } catch (const Error& e) {
      throw StepError("minimizing movements: step " + std::to_string(k) + ": " + e.what(), k);
    }
    // roundoff near a kink of psi can stall just short of 1e-10
    if (!res.converged && res.grad_norm > 1e-7)
      throw StepError("minimizing movements: inner solve did not converge at step " +
                          std::to_string(k),
                      k);
    nodes.row(k + 1) = res.x.transpose();
  }
  return Trajectory(params.T, std::move(nodes));
}

NullMinimumReport verify_null_minimum(const DeGiorgiParams& params, const OptimResult& result,
                                      double value_tol, double residual_tol) {
  NullMinimumReport rep;
  const Trajectory& traj = result.trajectory;
  rep.value = evaluate_J(params, traj);
  rep.converged = result.converged;
  rep.value_tol = value_tol;
  rep.residual_tol = residual_tol;

  // eps_quad = T/24 max |second difference of the weighted integrand|
  const double tau = traj.tau();
  std::vector<double> f(static_cast<std::size_t>(traj.N()));
  for (int k = 0; k < traj.N(); ++k) {
    const double t = (k + 0.5) * tau;
    const Eigen::VectorXd mid = 0.5 * (traj.node(k) + traj.node(k + 1));
    const Eigen::VectorXd v = (traj.node(k + 1) - traj.node(k)) / tau;
    f[static_cast<std::size_t>(k)] =
        std::exp(-params.a * t) * (params.pot.eval(t, mid, v) + slope(params.energy, params.pot, t, mid) +
                                   params.a * params.energy.eval(t, mid) - params.energy.dt(t, mid));
  }
  double d2 = 0.0;
  for (std::size_t k = 1; k + 1 < f.size(); ++k)
    d2 = std::max(d2, std::abs(f[k + 1] - 2.0 * f[k] + f[k - 1]));
  rep.eps_quad = params.T / 24.0 * d2;

  const auto r = residual_profile(params, traj);
  for (const double rk : r) rep.max_residual = std::max(rep.max_residual, rk);

  bool weights_ok = true;
  for (const double a_alt : {0.0, params.a, params.a + 1.0}) {
    if (a_alt < params.min_weight()) continue;
    const double v = evaluate_J(params.with_a(a_alt), traj);
    rep.weighted_values.emplace_back(a_alt, v);
    weights_ok = weights_ok && std::abs(v) <= value_tol;
  }
  rep.pass = std::abs(rep.value) <= value_tol && rep.max_residual <= residual_tol && weights_ok;
  return rep;
}

}  // namespace dgflow
