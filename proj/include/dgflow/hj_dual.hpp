#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "dgflow/degiorgi.hpp"

namespace dgflow {

/// Test function xi(t, x) = zeta(t, <z_1, x>, ..., <z_k, x>) with bounded
/// zeta. Built-in families: the canonical profile e^{-at} phi and spline
/// polynomials zeta(t, y) = sum_j c_j(t) y^j in one direction, with cubic
/// Hermite coefficients c_j on a uniform time grid.
class CylinderSubsolution {
 public:
  using ZetaFn = std::function<double(double, const Eigen::VectorXd&)>;
  using ZetaGradFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  /// Generic cylinder function. `directions` is k x n.
  CylinderSubsolution(Eigen::MatrixXd directions, ZetaFn zeta, ZetaFn zeta_t, ZetaGradFn zeta_y);

  /// e^{-at} phi(t, x) with k = n coordinate directions.
  static CylinderSubsolution canonical(const DeGiorgiParams& params);
  static CylinderSubsolution constant(int dim, double value);
  /// Spline polynomial along `direction`. Parameters are ordered per degree j,
  /// then per knot m: (value, time derivative) of c_j at knot m.
  static CylinderSubsolution spline_polynomial(double T, int knots, int degree,
                                               Eigen::VectorXd direction, Eigen::VectorXd params);

  int k() const { return static_cast<int>(directions_.rows()); }
  int dim() const { return static_cast<int>(directions_.cols()); }
  const Eigen::MatrixXd& directions() const { return directions_; }

  double value(double t, const Eigen::VectorXd& x) const;
  double dt(double t, const Eigen::VectorXd& x) const;
  /// D_x xi = sum_i d_i zeta * z_i.
  Eigen::VectorXd grad_x(double t, const Eigen::VectorXd& x) const;

  /// xi + c.
  CylinderSubsolution plus(double c) const;
  /// xi + eps (t - T - 1).
  CylinderSubsolution perturbed(double eps, double T) const;

  /// Sup-norm bounds of xi, d_t xi, |D_x xi| over a sample cloud.
  struct Bounds {
    double value = 0.0;
    double dt = 0.0;
    double grad = 0.0;
  };
  Bounds bounds(const std::vector<std::pair<double, Eigen::VectorXd>>& samples) const;

  /// Family tag and data for serialization; empty for generic functions.
  const nlohmann::json& description() const { return *description_; }

 private:
  Eigen::MatrixXd directions_;
  ZetaFn zeta_;
  ZetaFn zeta_t_;
  ZetaGradFn zeta_y_;
  std::shared_ptr<nlohmann::json> description_;
};

/// (t, x) points for feasibility checks: a box grid over [0, T] x box plus a
/// Halton cloud. For n > 1 the grid is replaced by extra Halton points.
struct SampleSpec {
  int grid_t = 201;
  int grid_x = 201;
  int quasi_random = 10000;
  /// Half-width of the spatial box around x0.
  double radius = 3.0;

  std::vector<std::pair<double, Eigen::VectorXd>> points(double T, const Eigen::VectorXd& x0) const;
};

inline constexpr double kFeasibilityTolerance = 1e-6;
inline constexpr double kDualTolerance = 1e-3;

struct FeasibilityReport {
  double max_violation_hj = 0.0;
  double max_violation_terminal = 0.0;
  double worst_t = 0.0;
  Eigen::VectorXd worst_x;
  bool feasible = false;
  long samples_checked = 0;
  double tol_feas = kFeasibilityTolerance;
};

/// Samples -d_t xi + e^{-at} psi*(-e^{at} D xi) <= e^{-at}(S + a phi - d_t phi)
/// on [0, T] and xi(T, x) <= e^{-aT} phi(T, x).
FeasibilityReport check_hj_feasible(const DeGiorgiParams& params, const CylinderSubsolution& xi,
                                    const SampleSpec& spec = {},
                                    double tol_feas = kFeasibilityTolerance);

struct PerturbationCheck {
  double eps = 0.0;
  /// Smallest slack of the two inequalities for xi + eps (t - T - 1).
  double min_margin_hj = 0.0;
  double min_margin_terminal = 0.0;
  bool ok = false;
};

struct BackwardBoundReport {
  /// Set when xi did not pass the feasibility check; the bound is then not implied.
  bool vacuous = false;
  /// max of xi(t, x) - e^{-at} phi(t, x) over the samples.
  double max_excess = 0.0;
  double min_slack = 0.0;
  bool holds = false;
  std::vector<PerturbationCheck> perturbations;
};

BackwardBoundReport check_backward_bound(const DeGiorgiParams& params,
                                         const CylinderSubsolution& xi,
                                         const SampleSpec& spec = {}, double tol = 1e-8);

/// sum (xi(0, x_i) - phi(0, x_i)) mu0_i over support points `points` (rows).
double dual_value(const DeGiorgiParams& params, const CylinderSubsolution& xi,
                  const Eigen::MatrixXd& points, const Eigen::VectorXd& mu0);
/// Delta datum at params.x0.
double dual_value(const DeGiorgiParams& params, const CylinderSubsolution& xi);

struct DualFamilySpec {
  int knots = 11;
  int degree = 1;
  /// Total parameter count is 2 knots (degree + 1), capped at 200.
  int max_params = 200;
};

struct DualOptions {
  int rounds = 5;
  int iterations_per_round = 200;
  double initial_weight = 1e2;
  double weight_growth = 10.0;
  /// Extra solves at the final weight with the worst points between grid
  /// nodes added as constraints.
  int exchange_passes = 3;
  SampleSpec samples;
  double tol_feas = kFeasibilityTolerance;
  double tol_dual = kDualTolerance;
};

struct DualResult {
  CylinderSubsolution certificate;
  double value = 0.0;
  FeasibilityReport feasibility;
  /// eps of the final xi + eps (t - T - 1) restoration.
  double restoration_eps = 0.0;
  /// value > tol_dual: the one-sided bound failed on this certificate.
  bool falsified = false;
  int iterations = 0;
};

/// Penalized ascent of xi(0, x0) - phi(0, x0) over the spline-polynomial
/// family along the first coordinate, started from xi = 0. Throws
/// InfeasibleFamilyError when no feasible member is found.
DualResult maximize_dual(const DeGiorgiParams& params, const DualFamilySpec& family = {},
                         const DualOptions& opts = {});

nlohmann::json to_json(const FeasibilityReport& report);
nlohmann::json to_json(const CylinderSubsolution& xi, const FeasibilityReport& report,
                       const CylinderSubsolution::Bounds& bounds);

}  // namespace dgflow
