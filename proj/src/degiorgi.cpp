#include "dgflow/degiorgi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(const DeGiorgiParams& params, const Trajectory& traj) {
  if (traj.N() != params.N || std::abs(traj.T() - params.T) > 1e-12 * params.T)
    throw InputError("trajectory grid does not match parameters");
  if (traj.dim() != params.x0.size()) throw InputError("trajectory dimension mismatch");
  if ((traj.node(0) - params.x0).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + params.x0.norm()))
    throw InputError("trajectory does not start at x0");
}

}  // namespace

Trajectory::Trajectory(double T, Eigen::MatrixXd nodes) : T_(T), nodes_(std::move(nodes)) {
  if (!(T > 0.0)) throw InputError("trajectory: horizon must be positive");
  if (nodes_.rows() < 3) throw InputError("trajectory: need N >= 2");
  if (nodes_.cols() < 1) throw InputError("trajectory: empty state");
  if (!nodes_.allFinite()) throw InputError("trajectory: non-finite node");
}

Trajectory Trajectory::constant(const Eigen::VectorXd& x0, double T, int N) {
  Eigen::MatrixXd nodes(N + 1, x0.size());
  for (int k = 0; k <= N; ++k) nodes.row(k) = x0.transpose();
  return Trajectory(T, std::move(nodes));
}

Trajectory Trajectory::sample(const std::function<Eigen::VectorXd(double)>& curve, double T,
                              int N) {
  const Eigen::VectorXd first = curve(0.0);
  Eigen::MatrixXd nodes(N + 1, first.size());
  for (int k = 0; k <= N; ++k) nodes.row(k) = curve(T * k / N).transpose();
  return Trajectory(T, std::move(nodes));
}

Eigen::VectorXd Trajectory::free_nodes() const {
  const int n = dim();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(N()) * n);
  for (int k = 1; k <= N(); ++k) flat.segment((k - 1) * n, n) = nodes_.row(k).transpose();
  return flat;
}

void Trajectory::set_free_nodes(const Eigen::VectorXd& flat) {
  const int n = dim();
  if (flat.size() != static_cast<Eigen::Index>(N()) * n)
    throw InputError("trajectory: free node vector has wrong length");
  for (int k = 1; k <= N(); ++k) nodes_.row(k) = flat.segment((k - 1) * n, n).transpose();
}

double Trajectory::path_length() const {
  double len = 0.0;
  for (int k = 0; k < N(); ++k) len += (nodes_.row(k + 1) - nodes_.row(k)).norm();
  return len;
}

double Trajectory::sup_distance(const Trajectory& other) const {
  if (other.N() == N() && other.dim() == dim()) {
    double d = 0.0;
    for (int k = 0; k <= N(); ++k) d = std::max(d, (nodes_.row(k) - other.nodes_.row(k)).norm());
    return d;
  }
  // different grids: compare at the nodes of both
  double d = 0.0;
  for (int k = 0; k <= N(); ++k) d = std::max(d, (node(k) - other.at(time(k))).norm());
  for (int k = 0; k <= other.N(); ++k)
    d = std::max(d, (other.node(k) - at(other.time(k))).norm());
  return d;
}

Eigen::VectorXd Trajectory::at(double t) const {
  const double s = std::clamp(t / tau(), 0.0, static_cast<double>(N()));
  const int k = std::min(static_cast<int>(std::floor(s)), N() - 1);
  const double w = s - k;
  return (1.0 - w) * node(k) + w * node(k + 1);
}

DeGiorgiParams::DeGiorgiParams(double a_, EnergyModel energy_, DissipationPotential pot_,
                               Eigen::VectorXd x0_, double T_, int N_)
    : a(a_), energy(std::move(energy_)), pot(std::move(pot_)), x0(std::move(x0_)), T(T_), N(N_) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError("horizon T must be positive");
  if (N < 2) throw InputError("grid size N must be at least 2");
  if (x0.size() != energy.dim() || pot.dim() != energy.dim())
    throw InputError("dimension mismatch between x0, energy and potential");
  if (!x0.allFinite()) throw InputError("x0 must be finite");
  if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("weight a must be finite and >= 0");
  if (energy.time_dependent()) {
    if (!energy.power_bound()) throw InputError("time-dependent energy requires a power bound (b, c)");
    if (a < energy.power_bound()->b) {
      std::ostringstream os;
      os << "time-dependent energy requires a >= b = " << energy.power_bound()->b << ", got a = " << a;
      throw InputError(os.str());
    }
  }
}

DeGiorgiParams DeGiorgiParams::with_a(double a_new) const {
  return DeGiorgiParams(a_new, energy, pot, x0, T, N);
}

DeGiorgiParams DeGiorgiParams::with_N(int N_new) const {
  return DeGiorgiParams(a, energy, pot, x0, T, N_new);
}

double DeGiorgiParams::min_weight() const {
  return energy.time_dependent() && energy.power_bound() ? energy.power_bound()->b : 0.0;
}

double evaluate_J(const DeGiorgiParams& params, const Trajectory& traj) {
  check_grid(params, traj);
  const double tau = traj.tau();
  const double a = params.a;
  double sum = 0.0;
  for (int k = 0; k < traj.N(); ++k) {
    const double t = (k + 0.5) * tau;
    const Eigen::VectorXd xk = traj.node(k);
    const Eigen::VectorXd xk1 = traj.node(k + 1);
    const Eigen::VectorXd mid = 0.5 * (xk + xk1);
    const Eigen::VectorXd v = (xk1 - xk) / tau;
    const double psi = params.pot.eval(t, mid, v);
    if (!std::isfinite(psi)) return kInf;
    const double S = slope(params.energy, params.pot, t, mid);
    const double integrand =
        psi + S + a * params.energy.eval(t, mid) - params.energy.dt(t, mid);
    sum += tau * std::exp(-a * t) * integrand;
  }
  return std::exp(-a * params.T) * params.energy.eval(params.T, traj.node(traj.N())) -
         params.energy.eval(0.0, params.x0) + sum;
}

double evaluate_J(const DeGiorgiParams& params, const Trajectory& traj, Eigen::VectorXd& grad) {
  const double value = evaluate_J(params, traj);
  if (!std::isfinite(value)) return value;
  const int n = traj.dim();
  const int N = traj.N();
  const double tau = traj.tau();
  const double a = params.a;
  const auto& pot = params.pot;
  const auto& energy = params.energy;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N + 1, n);
  for (int k = 0; k < N; ++k) {
    const double t = (k + 0.5) * tau;
    const double w = tau * std::exp(-a * t);
    const Eigen::VectorXd xk = traj.node(k);
    const Eigen::VectorXd xk1 = traj.node(k + 1);
    const Eigen::VectorXd mid = 0.5 * (xk + xk1);
    const Eigen::VectorXd v = (xk1 - xk) / tau;

    const double A = pot.friction_at(t, mid);
    const Eigen::VectorXd dA = pot.friction_grad(t, mid);
    const Eigen::VectorXd dphi = energy.grad(t, mid).components;
    const Eigen::MatrixXd H = energy.hessian(t, mid);
    const Eigen::VectorXd gz = -dphi / A;
    const Eigen::VectorXd vstar = pot.base_conjugate_grad(gz);
    const double psi0 = pot.base_eval(v);

    const Eigen::VectorXd d_vel = w * A * pot.base_grad(v);
    // d/dx [A psi0*(-D phi / A)] = dA (psi0*(g) - <grad psi0*(g), g>) - H grad psi0*(g)
    const Eigen::VectorXd d_mid =
        w * (dA * (psi0 + pot.base_conjugate(gz) - vstar.dot(gz)) - H * vstar + a * dphi -
             energy.dt_grad(t, mid));

    g.row(k) += (0.5 * d_mid - d_vel / tau).transpose();
    g.row(k + 1) += (0.5 * d_mid + d_vel / tau).transpose();
  }
  g.row(N) += (std::exp(-a * params.T) * energy.grad(params.T, traj.node(N)).components).transpose();
  grad.resize(static_cast<Eigen::Index>(N) * n);
  for (int k = 1; k <= N; ++k) grad.segment((k - 1) * n, n) = g.row(k).transpose();
  return value;
}

std::vector<double> residual_profile(const DeGiorgiParams& params, const Trajectory& traj) {
  check_grid(params, traj);
  const double tau = traj.tau();
  std::vector<double> r(static_cast<std::size_t>(traj.N()));
  for (int k = 0; k < traj.N(); ++k) {
    const double t = (k + 0.5) * tau;
    const Eigen::VectorXd mid = 0.5 * (traj.node(k) + traj.node(k + 1));
    const Eigen::VectorXd v = (traj.node(k + 1) - traj.node(k)) / tau;
    const Eigen::VectorXd z = params.energy.grad(t, mid).components;
    const double psi = params.pot.eval(t, mid, v);
    r[static_cast<std::size_t>(k)] =
        std::isfinite(psi) ? psi + params.pot.conjugate(t, mid, DualVector(-z)) + z.dot(v) : kInf;
  }
  return r;
}

double weighted_residual_sum(const DeGiorgiParams& params, const Trajectory& traj) {
  const auto r = residual_profile(params, traj);
  const double tau = traj.tau();
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k)
    s += tau * std::exp(-params.a * (static_cast<double>(k) + 0.5) * tau) * r[k];
  return s;
}

JReport j_report(const DeGiorgiParams& params, const Trajectory& traj) {
  JReport rep;
  rep.value = evaluate_J(params, traj);
  const auto r = residual_profile(params, traj);
  for (const double rk : r) rep.per_step_residual_max = std::max(rep.per_step_residual_max, rk);
  rep.quadrature_N = traj.N();
  return rep;
}

ShiftReport shift_invariance_check(const DeGiorgiParams& params, const Trajectory& traj,
                                   double k_energy, double k_pot) {
  const double base = evaluate_J(params, traj);
  DeGiorgiParams shifted_energy(params.a, params.energy.with_offset(k_energy), params.pot,
                                params.x0, params.T, params.N);
  DeGiorgiParams shifted_pot(params.a, params.energy, params.pot.shifted(k_pot), params.x0,
                             params.T, params.N);
  ShiftReport rep;
  rep.energy_shift_difference = std::abs(evaluate_J(shifted_energy, traj) - base);
  rep.potential_shift_difference = std::abs(evaluate_J(shifted_pot, traj) - base);
  return rep;
}

void check_power_bound_on_nodes(const DeGiorgiParams& params, const Trajectory& traj) {
  if (!params.energy.time_dependent()) return;
  const double tau = traj.tau();
  auto check = [&](double t, const Eigen::VectorXd& x) {
    if (!params.energy.power_bound_holds(t, x)) {
      std::ostringstream os;
      os << "power bound violated at quadrature node t=" << t << ", x=" << x.transpose();
      throw PowerBoundViolation(os.str());
    }
  };
  for (int k = 0; k < traj.N(); ++k)
    check((k + 0.5) * tau, 0.5 * (traj.node(k) + traj.node(k + 1)));
  for (int k = 0; k <= traj.N(); ++k) check(traj.time(k), traj.node(k));
}

}  // namespace dgflow
