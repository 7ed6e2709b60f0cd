#include "dgflow/energy_models.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "dgflow/errors.hpp"
#include "dgflow/friction.hpp"

namespace dgflow {

namespace {

std::vector<double> pack(double t, const Eigen::VectorXd& x) {
  std::vector<double> slots(static_cast<std::size_t>(x.size()) + 1);
  slots[0] = t;
  for (Eigen::Index i = 0; i < x.size(); ++i) slots[static_cast<std::size_t>(i) + 1] = x[i];
  return slots;
}

double fd_step(double xi) { return 1e-6 * (1.0 + std::abs(xi)); }

}  // namespace

EnergyModel EnergyModel::quadratic(int dim, Eigen::VectorXd center, double curvature) {
  if (dim < 1) throw InputError("energy: dimension must be positive");
  if (center.size() != dim) throw InputError("quadratic energy: center has wrong length");
  if (!(curvature > 0.0)) throw InputError("quadratic energy: curvature must be positive");
  EnergyModel e(EnergyFamily::Quadratic, dim);
  e.center_ = std::move(center);
  e.curvature_ = curvature;
  return e;
}

EnergyModel EnergyModel::double_well(int dim, double scale) {
  if (dim < 1) throw InputError("energy: dimension must be positive");
  if (!(scale > 0.0)) throw InputError("double well: scale must be positive");
  EnergyModel e(EnergyFamily::DoubleWell, dim);
  e.scale_ = scale;
  return e;
}

EnergyModel EnergyModel::parse(int dim, const std::string& expr, std::optional<PowerBound> bound,
                               double horizon, double box) {
  if (dim < 1) throw InputError("energy: dimension must be positive");
  const Expression phi = Expression::parse(expr, state_variables(dim));
  std::vector<Expression> grad;
  std::vector<std::vector<Expression>> hess;
  for (int i = 0; i < dim; ++i) grad.push_back(phi.derivative(i + 1));
  for (int i = 0; i < dim; ++i) {
    hess.emplace_back();
    for (int j = 0; j < dim; ++j) hess.back().push_back(grad[static_cast<std::size_t>(i)].derivative(j + 1));
  }
  const Expression dphi_dt = phi.derivative(0);
  std::vector<Expression> dt_grad;
  for (int i = 0; i < dim; ++i) dt_grad.push_back(dphi_dt.derivative(i + 1));

  EnergyModel e(EnergyFamily::Custom, dim);
  e.time_dependent_ = phi.depends_on(0);
  e.bound_ = bound;
  e.phi_ = [phi](double t, const Eigen::VectorXd& x) { return phi.eval(pack(t, x)); };
  e.grad_ = [grad](double t, const Eigen::VectorXd& x) {
    const auto slots = pack(t, x);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = grad[static_cast<std::size_t>(i)].eval(slots);
    return g;
  };
  e.dt_ = [dphi_dt](double t, const Eigen::VectorXd& x) { return dphi_dt.eval(pack(t, x)); };
  e.dt_grad_ = [dt_grad](double t, const Eigen::VectorXd& x) {
    const auto slots = pack(t, x);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = dt_grad[static_cast<std::size_t>(i)].eval(slots);
    return g;
  };
  e.hess_ = [hess](double t, const Eigen::VectorXd& x) {
    const auto slots = pack(t, x);
    const auto n = static_cast<Eigen::Index>(hess.size());
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        H(i, j) = hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(slots);
    return H;
  };
  e.normalize(horizon, box);
  return e;
}

EnergyModel EnergyModel::custom(int dim, ValueFn phi, GradFn grad, ValueFn dt, bool time_dependent,
                                std::optional<PowerBound> bound, double horizon, double box) {
  if (dim < 1) throw InputError("energy: dimension must be positive");
  if (!phi) throw InputError("custom energy: missing callable");
  EnergyModel e(EnergyFamily::Custom, dim);
  e.time_dependent_ = time_dependent;
  e.bound_ = bound;
  e.phi_ = std::move(phi);
  e.grad_ = std::move(grad);
  e.dt_ = std::move(dt);
  e.numeric_grad_ = !e.grad_;
  e.normalize(horizon, box);
  return e;
}

EnergyModel EnergyModel::with_offset(double k) const {
  EnergyModel out = *this;
  out.offset_ += k;
  return out;
}

void EnergyModel::check_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim_)
    throw InputError("energy: expected point of length " + std::to_string(dim_) + ", got " +
                     std::to_string(x.size()));
}

double EnergyModel::unshifted(double t, const Eigen::VectorXd& x) const {
  switch (family_) {
    case EnergyFamily::Quadratic:
      return 0.5 * curvature_ * (x - center_).squaredNorm();
    case EnergyFamily::DoubleWell: {
      const double r = x.squaredNorm() - 1.0;
      return 0.25 * scale_ * r * r;
    }
    case EnergyFamily::Custom:
      return phi_(t, x);
  }
  return 0.0;
}

void EnergyModel::normalize(double horizon, double box) {
  // grid scan followed by a compass search around the best sample
  const int per_axis = dim_ == 1 ? 801 : dim_ == 2 ? 81 : dim_ == 3 ? 21 : 9;
  const int t_samples = time_dependent_ ? 11 : 1;
  const double spacing = 2.0 * box / (per_axis - 1);
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(dim_);
  long total = 1;
  for (int i = 0; i < dim_; ++i) total *= per_axis;
  Eigen::VectorXd x(dim_);
  for (int k = 0; k < t_samples; ++k) {
    const double t = t_samples == 1 ? 0.0 : horizon * k / (t_samples - 1);
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      for (int i = 0; i < dim_; ++i) {
        x[i] = -box + spacing * static_cast<double>(rest % per_axis);
        rest /= per_axis;
      }
      const double f = phi_(t, x);
      if (f < best) {
        best = f;
        best_t = t;
        best_x = x;
      }
    }
  }
  if (!std::isfinite(best)) throw InputError("custom energy: no finite value on the sample box");
  double step = spacing;
  while (step > 1e-10) {
    bool moved = false;
    for (int i = 0; i < dim_; ++i) {
      for (const double dir : {-1.0, 1.0}) {
        Eigen::VectorXd y = best_x;
        y[i] += dir * step;
        const double f = phi_(best_t, y);
        if (f < best) {
          best = f;
          best_x = y;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  shift_ = best;
}

double EnergyModel::eval(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  return unshifted(t, x) - shift_ + offset_;
}

double EnergyModel::raw(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  return unshifted(t, x);
}

DualVector EnergyModel::grad(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  switch (family_) {
    case EnergyFamily::Quadratic:
      return DualVector(curvature_ * (x - center_));
    case EnergyFamily::DoubleWell:
      return DualVector(scale_ * (x.squaredNorm() - 1.0) * x);
    case EnergyFamily::Custom:
      break;
  }
  if (grad_) return DualVector(grad_(t, x));
  Eigen::VectorXd g(dim_);
  Eigen::VectorXd y = x;
  for (int i = 0; i < dim_; ++i) {
    const double h = fd_step(x[i]);
    y[i] = x[i] + h;
    const double fp = phi_(t, y);
    y[i] = x[i] - h;
    const double fm = phi_(t, y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return DualVector(g);
}

double EnergyModel::dt(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  if (!time_dependent_) return 0.0;
  if (dt_) return dt_(t, x);
  const double h = 1e-6 * (1.0 + std::abs(t));
  return (phi_(t + h, x) - phi_(t - h, x)) / (2.0 * h);
}

Eigen::VectorXd EnergyModel::dt_grad(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  if (!time_dependent_) return Eigen::VectorXd::Zero(dim_);
  if (dt_grad_) return dt_grad_(t, x);
  Eigen::VectorXd g(dim_);
  Eigen::VectorXd y = x;
  for (int i = 0; i < dim_; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    y[i] = x[i] + h;
    const double fp = dt(t, y);
    y[i] = x[i] - h;
    const double fm = dt(t, y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd EnergyModel::hessian(double t, const Eigen::VectorXd& x) const {
  check_dim(x);
  switch (family_) {
    case EnergyFamily::Quadratic:
      return curvature_ * Eigen::MatrixXd::Identity(dim_, dim_);
    case EnergyFamily::DoubleWell:
      return scale_ * ((x.squaredNorm() - 1.0) * Eigen::MatrixXd::Identity(dim_, dim_) +
                       2.0 * x * x.transpose());
    case EnergyFamily::Custom:
      break;
  }
  if (hess_) return hess_(t, x);
  Eigen::MatrixXd H(dim_, dim_);
  Eigen::VectorXd y = x;
  for (int j = 0; j < dim_; ++j) {
    const double h = 1e-5 * (1.0 + std::abs(x[j]));
    y[j] = x[j] + h;
    const Eigen::VectorXd gp = grad(t, y).components;
    y[j] = x[j] - h;
    const Eigen::VectorXd gm = grad(t, y).components;
    y[j] = x[j];
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

bool EnergyModel::power_bound_holds(double t, const Eigen::VectorXd& x, double tol) const {
  if (!time_dependent_) return true;
  if (!bound_) return false;
  const double lhs = std::abs(dt(t, x));
  const double rhs = bound_->b * (eval(t, x) + bound_->c * (1.0 + x.norm()));
  return lhs <= rhs + tol * (1.0 + rhs);
}

double slope(const EnergyModel& energy, const DissipationPotential& pot, double t,
             const Eigen::VectorXd& x) {
  return pot.conjugate(t, x, DualVector(-energy.grad(t, x).components));
}

double max_gradient_error(const EnergyModel& energy, int count, unsigned seed, double horizon,
                          double box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-box, box);
  std::uniform_real_distribution<double> ut(0.0, horizon);
  double worst = 0.0;
  const int n = energy.dim();
  for (int s = 0; s < count; ++s) {
    const double t = ut(rng);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = ux(rng);
    const Eigen::VectorXd g = energy.grad(t, x).components;
    Eigen::VectorXd fd(n);
    Eigen::VectorXd y = x;
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6;
      y[i] = x[i] + h;
      const double fp = energy.eval(t, y);
      y[i] = x[i] - h;
      const double fm = energy.eval(t, y);
      y[i] = x[i];
      fd[i] = (fp - fm) / (2.0 * h);
    }
    // relative to the gradient scale, with an absolute floor for near-critical points
    const double err = (g - fd).norm() / std::max(1.0, g.norm());
    worst = std::max(worst, err);
  }
  return worst;
}

void check_power_bound(const EnergyModel& energy, int count, unsigned seed, double horizon,
                       double box) {
  if (!energy.time_dependent()) return;
  if (!energy.power_bound()) throw PowerBoundViolation("time-dependent energy without power bound");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-box, box);
  std::uniform_real_distribution<double> ut(0.0, horizon);
  const int n = energy.dim();
  for (int s = 0; s < count; ++s) {
    const double t = ut(rng);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = ux(rng);
    if (!energy.power_bound_holds(t, x)) {
      std::ostringstream os;
      os << "power bound violated at t=" << t << ", |x|=" << x.norm() << ": |d_t phi|="
         << std::abs(energy.dt(t, x));
      throw PowerBoundViolation(os.str());
    }
  }
}

}  // namespace dgflow
