#include "dgflow/friction.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "dgflow/errors.hpp"

namespace dgflow {

Expression::VariableMap state_variables(int dim) {
  Expression::VariableMap vars{{"t", 0}};
  for (int i = 0; i < dim; ++i) vars["x" + std::to_string(i + 1)] = i + 1;
  if (dim == 1) vars["x"] = 1;
  return vars;
}

namespace {

std::vector<double> pack(double t, const Eigen::VectorXd& x) {
  std::vector<double> slots(static_cast<std::size_t>(x.size()) + 1);
  slots[0] = t;
  for (Eigen::Index i = 0; i < x.size(); ++i) slots[static_cast<std::size_t>(i) + 1] = x[i];
  return slots;
}

}  // namespace

FrictionField::FrictionField(int dim, Expression coefficient, double lower, double upper)
    : dim_(dim), coefficient_(std::move(coefficient)), lower_(lower), upper_(upper) {
  if (dim < 1) throw InputError("friction: dimension must be positive");
  if (!(lower > 0.0) || !(upper >= lower) || !std::isfinite(upper))
    throw InputError("friction: need 0 < lower <= upper < inf");
  for (int i = 0; i < dim; ++i) gradient_.push_back(coefficient_.derivative(i + 1));
}

FrictionField FrictionField::constant(int dim, double value) {
  return FrictionField(dim, Expression::constant(value), value, value);
}

FrictionField FrictionField::parse(int dim, const std::string& expr, double lower, double upper) {
  return FrictionField(dim, Expression::parse(expr, state_variables(dim)), lower, upper);
}

double FrictionField::value(double t, const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw InputError("friction: dimension mismatch");
  return coefficient_.eval(pack(t, x));
}

Eigen::VectorXd FrictionField::grad_x(double t, const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw InputError("friction: dimension mismatch");
  const auto slots = pack(t, x);
  Eigen::VectorXd g(dim_);
  for (int i = 0; i < dim_; ++i) g[i] = gradient_[static_cast<std::size_t>(i)].eval(slots);
  return g;
}

void FrictionField::check_bounds(double T, const Eigen::VectorXd& box_lo,
                                 const Eigen::VectorXd& box_hi, int per_axis) const {
  const int axes = dim_ + 1;
  long total = 1;
  for (int i = 0; i < axes; ++i) total *= per_axis;
  Eigen::VectorXd x(dim_);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    const double t = T * static_cast<double>(rest % per_axis) / (per_axis - 1);
    rest /= per_axis;
    for (int i = 0; i < dim_; ++i) {
      const double s = static_cast<double>(rest % per_axis) / (per_axis - 1);
      rest /= per_axis;
      x[i] = box_lo[i] + s * (box_hi[i] - box_lo[i]);
    }
    const double a = value(t, x);
    if (!(a >= lower_ - 1e-12 && a <= upper_ + 1e-12)) {
      std::ostringstream os;
      os << "friction: a(" << t << ", x) = " << a << " outside [" << lower_ << ", " << upper_
         << "]";
      throw InputError(os.str());
    }
  }
}

}  // namespace dgflow
