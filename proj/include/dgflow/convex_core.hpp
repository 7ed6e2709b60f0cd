#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "dgflow/friction.hpp"

namespace dgflow {

/// Element of the dual space, identified with R^n.
struct DualVector {
  Eigen::VectorXd components;

  DualVector() = default;
  explicit DualVector(Eigen::VectorXd z) : components(std::move(z)) {}
  Eigen::Index size() const { return components.size(); }
};

enum class PotentialFamily { QuadraticMetric, PowerP, Entropy, Custom };

inline constexpr double kDefaultGapTolerance = 1e-8;

/// Convex superlinear dissipation potential psi(t, x, v) = a(t, x) psi0(v) + k,
/// where a is an optional friction field and k an additive shift.
class DissipationPotential {
 public:
  using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
  using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  static DissipationPotential quadratic(int dim, double weight = 1.0);
  static DissipationPotential power(int dim, double p);
  static DissipationPotential entropy(int dim);
  /// `psi` may return +inf outside its effective domain. Without `gradient`
  /// the subdifferential is taken from one-sided finite differences.
  static DissipationPotential custom(int dim, ScalarFn psi, VectorFn gradient = nullptr);
  /// Expression in v (n = 1) or v1..vn.
  static DissipationPotential parse(int dim, const std::string& expr);

  DissipationPotential with_friction(FrictionField friction) const;
  DissipationPotential shifted(double k) const;

  PotentialFamily family() const { return family_; }
  int dim() const { return dim_; }
  double weight() const { return weight_; }
  double exponent() const { return p_; }
  double shift() const { return shift_; }
  const std::optional<FrictionField>& friction() const { return friction_; }
  bool has_closed_form_conjugate() const { return family_ != PotentialFamily::Custom; }

  double eval(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;
  double conjugate(double t, const Eigen::VectorXd& x, const DualVector& z) const;
  DualVector subdifferential_select(double t, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& v) const;
  double fenchel_gap(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                     const DualVector& z) const;

  // Friction-free pieces, without the shift. Used by the solvers.
  double base_eval(const Eigen::VectorXd& v) const;
  Eigen::VectorXd base_grad(const Eigen::VectorXd& v) const;
  double base_conjugate(const Eigen::VectorXd& z) const;
  /// Gradient of psi0*, i.e. the maximizing velocity.
  Eigen::VectorXd base_conjugate_grad(const Eigen::VectorXd& z) const;

  double friction_at(double t, const Eigen::VectorXd& x) const;
  Eigen::VectorXd friction_grad(double t, const Eigen::VectorXd& x) const;

 private:
  DissipationPotential(PotentialFamily family, int dim) : family_(family), dim_(dim) {}
  void check_dim(const Eigen::VectorXd& v, const char* what) const;
  /// Maximizer of <z, v> - psi0(v) over |v| <= radius, for Custom.
  Eigen::VectorXd numeric_argmax(const Eigen::VectorXd& z) const;

  PotentialFamily family_;
  int dim_;
  double weight_ = 1.0;
  double p_ = 2.0;
  double shift_ = 0.0;
  ScalarFn custom_;
  VectorFn custom_grad_;
  std::optional<FrictionField> friction_;
};

/// Search radius of the numeric conjugate.
inline constexpr double kConjugateRadius = 1e3;

}  // namespace dgflow
