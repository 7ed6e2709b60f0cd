#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgflow/degiorgi.hpp"

namespace dgflow {

/// Uniform space-time grid on [0, T] x [x_min, x_max]: Nt time slabs of
/// length tau, Nx cells of width h. Face f (0..Nx) is the left face of cell f.
struct SpaceTimeGrid {
  SpaceTimeGrid(double T, int Nt, double x_min, double x_max, int Nx);

  double tau() const { return T / Nt; }
  double h() const { return (x_max - x_min) / Nx; }
  double center(int i) const { return x_min + (i + 0.5) * h(); }
  double face(int f) const { return x_min + f * h(); }
  /// Cell containing x; a point on a face belongs to the upper cell.
  int cell_of(double x) const;
  bool contains(double x) const { return x > x_min && x < x_max; }

  double T;
  int Nt;
  double x_min;
  double x_max;
  int Nx;
};

/// Discrete (m, mu, nu) on a SpaceTimeGrid.
///
/// mu(k, i) is the mass of cell i during slab k. It is split into a part
/// sitting on the left face (left), one on the right face (right) and the
/// remainder at the cell center. Momentum nu(k, f) lives on faces and is
/// carried by the face mass right(k, f-1) + left(k, f); boundary faces carry
/// none (no-flux).
struct GridMeasureTriple {
  Eigen::MatrixXd mu;     // Nt x Nx
  Eigen::MatrixXd left;   // Nt x Nx
  Eigen::MatrixXd right;  // Nt x Nx
  Eigen::MatrixXd nu;     // Nt x (Nx + 1)
  Eigen::VectorXd m_end;  // Nx
  Eigen::VectorXd mu0;    // Nx

  /// Mass resting in the same cells for all times, all of it at centers.
  static GridMeasureTriple stationary(const SpaceTimeGrid& grid, const Eigen::VectorXd& mu0);

  double face_mass(int k, int f) const;
  Eigen::MatrixXd center_mass() const { return mu - left - right; }
};

/// Unit mass in the cell containing x0.
Eigen::VectorXd delta_datum(const SpaceTimeGrid& grid, double x0);
/// Unit mass with Gaussian profile (default width 2h) centered at x0.
Eigen::VectorXd gaussian_datum(const SpaceTimeGrid& grid, double x0, double sigma = -1.0);

/// Discrete continuity equation. Node rows k = 0..Nt:
///   row 0:      mu(0) - mu0
///   row k:      mu(k) - mu(k-1) + (tau/h) div nu(k-1)      (0 < k < Nt)
///   row Nt:     m_end - mu(Nt-1) + (tau/h) div nu(Nt-1)
/// with (div nu)_i = nu_{i+1} - nu_i. Pairing with a test field xi on nodes
/// gives the weak form
///   sum dt xi mu + sum dx xi nu - sum xi(T) m + sum xi(0) mu0 = -<xi, residual>.
class ContinuityOperator {
 public:
  explicit ContinuityOperator(SpaceTimeGrid grid) : grid_(std::move(grid)) {}

  const SpaceTimeGrid& grid() const { return grid_; }
  Eigen::MatrixXd apply(const GridMeasureTriple& triple) const;  // (Nt+1) x Nx
  double weak_form(const GridMeasureTriple& triple, const Eigen::MatrixXd& xi) const;
  /// max |residual| / total mass
  double scaled_residual(const GridMeasureTriple& triple) const;

 private:
  SpaceTimeGrid grid_;
};

ContinuityOperator assemble_continuity_operator(const SpaceTimeGrid& grid);

/// Discrete E^a. Face masses pay the dissipation through the perspective
/// w rho psi0(nu / rho) (0 for rho = nu = 0, +inf for rho = 0 != nu) and the
/// slab cost of S + a phi - d_t phi at the face; center masses pay that cost at
/// the center.
double evaluate_E(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                  const GridMeasureTriple& triple);

struct RelaxOptions {
  int max_iter = 200000;
  /// Stop once the certified duality gap is below this value.
  double gap_tol = 1e-3;
  int check_every = 250;
  double time_limit_s = 50.0;
  /// Ratio of primal to dual step (the product is fixed by the operator norm).
  double step_ratio = 1.0;
  bool gaussian_datum = false;
};

struct RelaxHistoryEntry {
  int iteration = 0;
  double value = 0.0;
  double gap = 0.0;
};

struct RelaxResult {
  GridMeasureTriple triple;
  double value = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  /// Feasible discrete dual field on nodes x cells, (Nt+1) x Nx.
  Eigen::MatrixXd xi;
  int iterations = 0;
  bool converged = false;
  double operator_norm = 0.0;
  std::vector<RelaxHistoryEntry> history;
};

/// Primal-dual (Chambolle-Pock) solve of the relaxed problem. The returned
/// triple satisfies the continuity equation exactly (restoration step) and the
/// gap is measured against a feasible dual field, so it is a certificate.
/// `mu0` defaults to the delta (or Gaussian) datum at params.x0.
RelaxResult solve_relaxed(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                          const RelaxOptions& opts = {}, const Eigen::VectorXd* mu0 = nullptr);

/// Dual objective sum (xi(0) - phi(0)) mu0 of a field after projecting it onto
/// the discrete dual constraints; the projected field is written to `feasible`.
double discrete_dual_value(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                           const Eigen::MatrixXd& xi, const Eigen::VectorXd& mu0,
                           Eigen::MatrixXd* feasible = nullptr);

/// Lifts a curve to the grid: at each node time the unit mass is split
/// linearly between the two bracketing cell centers; fluxes follow from the
/// cumulative masses so the continuity equation holds exactly.
GridMeasureTriple lift_trajectory(const SpaceTimeGrid& grid, const Trajectory& traj);

/// Integrates x' = v(t, x), v = (smoothed nu) / (smoothed face mass) with a hat
/// kernel of half-width 2h in space and linear interpolation in time,
/// by explicit midpoint steps of size tau. Throws
/// ReconstructionDegenerateError in vacuum.
Trajectory reconstruct_characteristic(const SpaceTimeGrid& grid, const GridMeasureTriple& triple,
                                      double x0);

/// Discrete action sum_f w rho psi0(nu / rho).
double discrete_action(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                       const GridMeasureTriple& triple);
/// sum_f [zeta nu - w rho psi0*(zeta / w)] for a face field zeta, Nt x (Nx+1).
double action_dual_value(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                         const GridMeasureTriple& triple, const Eigen::MatrixXd& zeta);
/// zeta = w grad psi0(nu / rho) where rho > 0.
Eigen::MatrixXd action_maximizer(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                                 const GridMeasureTriple& triple);

/// Proximal map of gamma * [w rho psi0(nu / rho)] at (rho, nu) for the
/// quadratic psi0 = weight nu^2 / 2 (cubic resolvent).
std::pair<double, double> perspective_prox_quadratic(double rho, double nu, double gamma_w);
/// Same map for any family through the Moreau identity and a 1-D Newton solve.
std::pair<double, double> perspective_prox(const DissipationPotential& pot, double w,
                                           double gamma, double rho, double nu);

}  // namespace dgflow
