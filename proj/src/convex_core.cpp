#include "dgflow/convex_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |z|^(r-2) z with the r < 2 singularity at the origin mapped to 0.
Eigen::VectorXd power_gradient(const Eigen::VectorXd& z, double r) {
  const double norm = z.norm();
  if (norm == 0.0) return Eigen::VectorXd::Zero(z.size());
  return std::pow(norm, r - 2.0) * z;
}

// Golden-section maximization of a concave f on [lo, hi]; -inf values are
// treated as outside the domain.
template <class F>
double golden_max(F&& f, double lo, double hi, double center, double tol) {
  constexpr double g = 0.6180339887498949;
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    if (!std::isfinite(fc) && !std::isfinite(fd)) {
      // both probes outside the domain: contract towards the known point
      const double half = 0.25 * (hi - lo);
      lo = std::max(lo, center - half);
      hi = std::min(hi, center + half);
      if (center < lo || center > hi) break;
      c = hi - g * (hi - lo);
      d = lo + g * (hi - lo);
      fc = f(c);
      fd = f(d);
      continue;
    }
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  return f(mid) >= f(center) ? mid : center;
}

}  // namespace

DissipationPotential DissipationPotential::quadratic(int dim, double weight) {
  if (dim < 1) throw InputError("potential: dimension must be positive");
  if (!(weight > 0.0)) throw InputError("quadratic potential: weight must be positive");
  DissipationPotential pot(PotentialFamily::QuadraticMetric, dim);
  pot.weight_ = weight;
  return pot;
}

DissipationPotential DissipationPotential::power(int dim, double p) {
  if (dim < 1) throw InputError("potential: dimension must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) throw InputError("power potential: need p > 1");
  DissipationPotential pot(PotentialFamily::PowerP, dim);
  pot.p_ = p;
  return pot;
}

DissipationPotential DissipationPotential::entropy(int dim) {
  if (dim < 1) throw InputError("potential: dimension must be positive");
  return DissipationPotential(PotentialFamily::Entropy, dim);
}

DissipationPotential DissipationPotential::custom(int dim, ScalarFn psi, VectorFn gradient) {
  if (dim < 1) throw InputError("potential: dimension must be positive");
  if (dim > 4) throw InputError("custom potential: numeric conjugate supports n <= 4");
  if (!psi) throw InputError("custom potential: missing callable");
  DissipationPotential pot(PotentialFamily::Custom, dim);
  pot.custom_ = std::move(psi);
  pot.custom_grad_ = std::move(gradient);
  if (!std::isfinite(pot.base_eval(Eigen::VectorXd::Zero(dim))))
    throw InputError("custom potential: psi(0) must be finite");
  return pot;
}

DissipationPotential DissipationPotential::parse(int dim, const std::string& expr) {
  Expression::VariableMap vars;
  for (int i = 0; i < dim; ++i) vars["v" + std::to_string(i + 1)] = i;
  if (dim == 1) vars["v"] = 0;
  const Expression psi = Expression::parse(expr, vars);
  std::vector<Expression> grad;
  for (int i = 0; i < dim; ++i) grad.push_back(psi.derivative(i));
  auto eval = [psi](const Eigen::VectorXd& v) {
    const double r = psi.eval(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
    return std::isnan(r) ? kInf : r;
  };
  auto gradient = [grad](const Eigen::VectorXd& v) {
    Eigen::VectorXd g(v.size());
    const std::span<const double> slots(v.data(), static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) g[i] = grad[static_cast<std::size_t>(i)].eval(slots);
    return g;
  };
  return custom(dim, eval, gradient);
}

DissipationPotential DissipationPotential::with_friction(FrictionField friction) const {
  if (friction.dim() != dim_) throw InputError("friction dimension does not match potential");
  DissipationPotential out = *this;
  out.friction_ = std::move(friction);
  return out;
}

DissipationPotential DissipationPotential::shifted(double k) const {
  DissipationPotential out = *this;
  out.shift_ += k;
  return out;
}

void DissipationPotential::check_dim(const Eigen::VectorXd& v, const char* what) const {
  if (v.size() != dim_)
    throw InputError(std::string(what) + ": expected length " + std::to_string(dim_) + ", got " +
                     std::to_string(v.size()));
}

double DissipationPotential::base_eval(const Eigen::VectorXd& v) const {
  switch (family_) {
    case PotentialFamily::QuadraticMetric:
      return 0.5 * weight_ * v.squaredNorm();
    case PotentialFamily::PowerP:
      return std::pow(v.norm(), p_) / p_;
    case PotentialFamily::Entropy: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0) return kInf;
        if (v[i] > 0.0) s += v[i] * (std::log(v[i]) - 1.0);
      }
      return s;
    }
    case PotentialFamily::Custom: {
      const double r = custom_(v);
      return std::isnan(r) ? kInf : r;
    }
  }
  return kInf;
}

Eigen::VectorXd DissipationPotential::base_grad(const Eigen::VectorXd& v) const {
  switch (family_) {
    case PotentialFamily::QuadraticMetric:
      return weight_ * v;
    case PotentialFamily::PowerP:
      return power_gradient(v, p_);
    case PotentialFamily::Entropy: {
      Eigen::VectorXd g(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw DomainError("entropy potential: subdifferential empty for v <= 0");
        g[i] = std::log(v[i]);
      }
      return g;
    }
    case PotentialFamily::Custom:
      break;
  }
  const double f0 = base_eval(v);
  if (!std::isfinite(f0)) throw DomainError("custom potential: v outside effective domain");
  if (dim_ == 1) {
    // one-sided slopes detect kinks; the minimal-norm element of [left, right] is returned
    const double h = 1e-7 * (1.0 + std::abs(v[0]));
    Eigen::VectorXd e(1);
    e[0] = v[0] + h;
    const double fr = base_eval(e);
    e[0] = v[0] - h;
    const double fl = base_eval(e);
    const double right = std::isfinite(fr) ? (fr - f0) / h : kInf;
    const double left = std::isfinite(fl) ? (f0 - fl) / h : -kInf;
    if (!std::isfinite(right) || !std::isfinite(left) ||
        right - left > 1e-4 * (1.0 + std::abs(left) + std::abs(right))) {
      Eigen::VectorXd g(1);
      g[0] = std::clamp(0.0, left, right);
      return g;
    }
  }
  if (custom_grad_) return custom_grad_(v);
  Eigen::VectorXd g(dim_);
  Eigen::VectorXd e = v;
  for (int i = 0; i < dim_; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(v[i]));
    e[i] = v[i] + h;
    const double fp = base_eval(e);
    e[i] = v[i] - h;
    const double fm = base_eval(e);
    e[i] = v[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DomainError("custom potential: v on the boundary of the effective domain");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd DissipationPotential::numeric_argmax(const Eigen::VectorXd& z) const {
  const int n = dim_;
  const int per_axis = n <= 2 ? 51 : (n == 3 ? 21 : 11);
  const double R = kConjugateRadius;
  const double spacing = 2.0 * R / (per_axis - 1);
  auto objective = [&](const Eigen::VectorXd& v) {
    if (v.norm() > R * (1.0 + 1e-12)) return -kInf;
    const double f = base_eval(v);
    return std::isfinite(f) ? z.dot(v) - f : -kInf;
  };

  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_val = objective(best);
  long total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  Eigen::VectorXd v(n);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    for (int i = 0; i < n; ++i) {
      v[i] = -R + spacing * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    const double f = objective(v);
    if (f > best_val) {
      best_val = f;
      best = v;
    }
  }
  if (!std::isfinite(best_val)) throw DomainError("custom potential: empty effective domain on grid");

  Eigen::VectorXd delta = Eigen::VectorXd::Constant(n, spacing);
  for (int sweep = 0; sweep < 500; ++sweep) {
    double max_move = 0.0;
    for (int i = 0; i < n; ++i) {
      const double old = best[i];
      auto line = [&](double s) {
        Eigen::VectorXd w = best;
        w[i] = s;
        return objective(w);
      };
      const double lo = std::max(-R, old - delta[i]);
      const double hi = std::min(R, old + delta[i]);
      best[i] = golden_max(line, lo, hi, old, 1e-10 * (1.0 + std::abs(old)));
      const double move = std::abs(best[i] - old);
      max_move = std::max(max_move, move);
      delta[i] = std::max(4.0 * move, 1e-6 * (1.0 + std::abs(best[i])));
    }
    if (n == 1 || max_move < 1e-11 * (1.0 + best.norm())) break;
  }
  if (best.norm() >= R * (1.0 - 1e-6))
    throw UnboundedConjugateError("custom potential: conjugate supremum reaches the search radius");
  return best;
}

double DissipationPotential::base_conjugate(const Eigen::VectorXd& z) const {
  switch (family_) {
    case PotentialFamily::QuadraticMetric:
      return 0.5 * z.squaredNorm() / weight_;
    case PotentialFamily::PowerP: {
      const double q = p_ / (p_ - 1.0);
      return std::pow(z.norm(), q) / q;
    }
    case PotentialFamily::Entropy:
      return z.array().exp().sum();
    case PotentialFamily::Custom: {
      const Eigen::VectorXd v = numeric_argmax(z);
      return z.dot(v) - base_eval(v);
    }
  }
  return kInf;
}

Eigen::VectorXd DissipationPotential::base_conjugate_grad(const Eigen::VectorXd& z) const {
  switch (family_) {
    case PotentialFamily::QuadraticMetric:
      return z / weight_;
    case PotentialFamily::PowerP:
      return power_gradient(z, p_ / (p_ - 1.0));
    case PotentialFamily::Entropy:
      return z.array().exp().matrix();
    case PotentialFamily::Custom:
      return numeric_argmax(z);
  }
  return z;
}

double DissipationPotential::friction_at(double t, const Eigen::VectorXd& x) const {
  return friction_ ? friction_->value(t, x) : 1.0;
}

Eigen::VectorXd DissipationPotential::friction_grad(double t, const Eigen::VectorXd& x) const {
  return friction_ ? friction_->grad_x(t, x) : Eigen::VectorXd::Zero(x.size());
}

double DissipationPotential::eval(double t, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& v) const {
  check_dim(v, "eval");
  const double base = base_eval(v);
  if (!std::isfinite(base)) return kInf;
  return friction_at(t, x) * base + shift_;
}

double DissipationPotential::conjugate(double t, const Eigen::VectorXd& x,
                                       const DualVector& z) const {
  check_dim(z.components, "conjugate");
  if (!z.components.allFinite()) throw InputError("conjugate: non-finite dual vector");
  const double a = friction_at(t, x);
  return a * base_conjugate(z.components / a) - shift_;
}

DualVector DissipationPotential::subdifferential_select(double t, const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& v) const {
  check_dim(v, "subdifferential_select");
  if (!std::isfinite(base_eval(v)))
    throw DomainError("subdifferential_select: v outside effective domain");
  return DualVector(friction_at(t, x) * base_grad(v));
}

double DissipationPotential::fenchel_gap(double t, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& v, const DualVector& z) const {
  check_dim(v, "fenchel_gap");
  return eval(t, x, v) + conjugate(t, x, z) - z.components.dot(v);
}

}  // namespace dgflow
