#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgflow/expression.hpp"

namespace dgflow {

/// Variable layout shared by every (t, x) expression: t at slot 0, x_i at slot i.
Expression::VariableMap state_variables(int dim);

/// Positive state-dependent friction coefficient a(t, x), bounded between
/// `lower` and `upper`.
class FrictionField {
 public:
  FrictionField(int dim, Expression coefficient, double lower, double upper);
  static FrictionField constant(int dim, double value);
  static FrictionField parse(int dim, const std::string& expr, double lower, double upper);

  int dim() const { return dim_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const Expression& coefficient() const { return coefficient_; }

  double value(double t, const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad_x(double t, const Eigen::VectorXd& x) const;

  /// Samples a on a regular grid over [0, T] x box and throws InputError when
  /// a leaves [lower, upper].
  void check_bounds(double T, const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                    int per_axis = 21) const;

 private:
  int dim_;
  Expression coefficient_;
  std::vector<Expression> gradient_;
  double lower_;
  double upper_;
};

}  // namespace dgflow
