#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dgflow/convex_core.hpp"
#include "dgflow/energy_models.hpp"

namespace dgflow {

/// Piecewise-linear curve on the uniform grid t_k = k T / N, k = 0..N.
/// Nodes are stored row-wise: nodes().row(k) is x(t_k).
class Trajectory {
 public:
  Trajectory(double T, Eigen::MatrixXd nodes);
  static Trajectory constant(const Eigen::VectorXd& x0, double T, int N);
  static Trajectory sample(const std::function<Eigen::VectorXd(double)>& curve, double T, int N);

  double T() const { return T_; }
  int N() const { return static_cast<int>(nodes_.rows()) - 1; }
  int dim() const { return static_cast<int>(nodes_.cols()); }
  double tau() const { return T_ / N(); }
  double time(int k) const { return T_ * k / N(); }
  Eigen::VectorXd node(int k) const { return nodes_.row(k).transpose(); }
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  Eigen::MatrixXd& nodes() { return nodes_; }

  /// Nodes 1..N flattened node-major; node 0 is the fixed initial datum.
  Eigen::VectorXd free_nodes() const;
  void set_free_nodes(const Eigen::VectorXd& flat);

  double path_length() const;
  double sup_distance(const Trajectory& other) const;
  /// Linear interpolation at time t in [0, T].
  Eigen::VectorXd at(double t) const;

 private:
  double T_;
  Eigen::MatrixXd nodes_;
};

/// Data of the weighted functional: exponential weight a, energy, dissipation,
/// initial datum, horizon and grid size.
struct DeGiorgiParams {
  DeGiorgiParams(double a, EnergyModel energy, DissipationPotential pot, Eigen::VectorXd x0,
                 double T, int N);

  /// Same problem with another weight; validated again.
  DeGiorgiParams with_a(double a_new) const;
  DeGiorgiParams with_N(int N_new) const;
  double tau() const { return T / N; }
  /// Smallest admissible weight: b for time-dependent energies, 0 otherwise.
  double min_weight() const;

  double a;
  EnergyModel energy;
  DissipationPotential pot;
  Eigen::VectorXd x0;
  double T;
  int N;
};

/// Discrete J^a by the midpoint rule; +inf when some velocity leaves the
/// effective domain of psi.
double evaluate_J(const DeGiorgiParams& params, const Trajectory& traj);

/// J^a and its gradient with respect to the free nodes (layout of
/// Trajectory::free_nodes). The gradient is left untouched when J is +inf.
double evaluate_J(const DeGiorgiParams& params, const Trajectory& traj, Eigen::VectorXd& grad);

/// Per-step Fenchel gaps r_k = psi(v_k) + psi*(-z_k) + <z_k, v_k>, z_k = D phi(t_k*, x_k*).
std::vector<double> residual_profile(const DeGiorgiParams& params, const Trajectory& traj);

/// sum_k tau e^{-a t_k*} r_k
double weighted_residual_sum(const DeGiorgiParams& params, const Trajectory& traj);

struct JReport {
  double value = 0.0;
  double per_step_residual_max = 0.0;
  int quadrature_N = 0;
};
JReport j_report(const DeGiorgiParams& params, const Trajectory& traj);

struct ShiftReport {
  double energy_shift_difference = 0.0;
  double potential_shift_difference = 0.0;
};
/// |J(phi + k_energy) - J| and |J(psi + k_pot) - J| on the same trajectory.
ShiftReport shift_invariance_check(const DeGiorgiParams& params, const Trajectory& traj,
                                   double k_energy, double k_pot);

/// Throws PowerBoundViolation if the bound fails at a quadrature node.
void check_power_bound_on_nodes(const DeGiorgiParams& params, const Trajectory& traj);

}  // namespace dgflow
