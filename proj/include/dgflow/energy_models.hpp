#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "dgflow/convex_core.hpp"
#include "dgflow/expression.hpp"

namespace dgflow {

enum class EnergyFamily { Quadratic, DoubleWell, Custom };

/// Constants of |d_t phi| <= b (phi + c (1 + |x|)).
struct PowerBound {
  double b = 0.0;
  double c = 0.0;
};

/// Energy phi(t, x), stored after subtracting its (estimated) infimum so that
/// values are nonnegative. `raw` undoes the shift.
class EnergyModel {
 public:
  using ValueFn = std::function<double(double, const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  /// curvature/2 |x - center|^2
  static EnergyModel quadratic(int dim, Eigen::VectorXd center, double curvature);
  /// scale/4 (|x|^2 - 1)^2
  static EnergyModel double_well(int dim, double scale);
  /// Expression in t, x (n = 1) or x1..xn. The model is time dependent iff t
  /// occurs. The infimum is estimated over [0, horizon] x [-box, box]^n.
  static EnergyModel parse(int dim, const std::string& expr, std::optional<PowerBound> bound = {},
                           double horizon = 1.0, double box = 4.0);
  /// Callable energy. Missing derivatives fall back to finite differences.
  static EnergyModel custom(int dim, ValueFn phi, GradFn grad, ValueFn dt, bool time_dependent,
                            std::optional<PowerBound> bound = {}, double horizon = 1.0,
                            double box = 4.0);

  /// phi + k on top of the normalization.
  EnergyModel with_offset(double k) const;

  EnergyFamily family() const { return family_; }
  int dim() const { return dim_; }
  bool time_dependent() const { return time_dependent_; }
  const std::optional<PowerBound>& power_bound() const { return bound_; }
  double normalization_shift() const { return shift_; }
  double offset() const { return offset_; }
  /// True when grad() is computed by finite differences.
  bool gradient_is_numeric() const { return numeric_grad_; }

  double eval(double t, const Eigen::VectorXd& x) const;
  double raw(double t, const Eigen::VectorXd& x) const;
  DualVector grad(double t, const Eigen::VectorXd& x) const;
  double dt(double t, const Eigen::VectorXd& x) const;
  /// Gradient in x of d_t phi.
  Eigen::VectorXd dt_grad(double t, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(double t, const Eigen::VectorXd& x) const;

  /// Whether |d_t phi| <= b (phi + c (1 + |x|)) holds at (t, x); true for
  /// autonomous models.
  bool power_bound_holds(double t, const Eigen::VectorXd& x, double tol = 1e-10) const;

 private:
  EnergyModel(EnergyFamily family, int dim) : family_(family), dim_(dim) {}
  void check_dim(const Eigen::VectorXd& x) const;
  double unshifted(double t, const Eigen::VectorXd& x) const;
  void normalize(double horizon, double box);

  EnergyFamily family_;
  int dim_;
  bool time_dependent_ = false;
  bool numeric_grad_ = false;
  double shift_ = 0.0;
  double offset_ = 0.0;
  Eigen::VectorXd center_;
  double curvature_ = 1.0;
  double scale_ = 1.0;
  ValueFn phi_;
  GradFn grad_;
  ValueFn dt_;
  GradFn dt_grad_;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> hess_;
  std::optional<PowerBound> bound_;
};

/// S(t, x) = psi*(t, x, -D phi(t, x)).
double slope(const EnergyModel& energy, const DissipationPotential& pot, double t,
             const Eigen::VectorXd& x);

/// Largest relative error between grad() and centered finite differences
/// (step 1e-6) at `count` random points of [0, horizon] x [-box, box]^n.
double max_gradient_error(const EnergyModel& energy, int count, unsigned seed,
                          double horizon = 1.0, double box = 2.0);

/// Samples the power bound at `count` random (t, x); throws PowerBoundViolation
/// on the first failure. No-op for autonomous models.
void check_power_bound(const EnergyModel& energy, int count, unsigned seed, double horizon,
                       double box);

}  // namespace dgflow
