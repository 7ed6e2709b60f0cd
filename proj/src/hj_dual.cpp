#include "dgflow/hj_dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "dgflow/errors.hpp"
#include "scalar_potential.hpp"

namespace dgflow {

namespace {

using Json = nlohmann::json;

double radical_inverse(long i, int base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31};

// Cubic Hermite basis on the interval containing t.
struct HermiteStencil {
  int interval = 0;
  double w[4] = {};   // value weights for (v_m, d_m, v_{m+1}, d_{m+1})
  double dw[4] = {};  // time-derivative weights
};

HermiteStencil hermite(double T, int knots, double t) {
  const double dt = T / (knots - 1);
  HermiteStencil st;
  st.interval = std::clamp(static_cast<int>(std::floor(t / dt)), 0, knots - 2);
  const double s = std::clamp(t / dt - st.interval, 0.0, 1.0);
  const double s2 = s * s;
  const double s3 = s2 * s;
  st.w[0] = 2 * s3 - 3 * s2 + 1;
  st.w[1] = dt * (s3 - 2 * s2 + s);
  st.w[2] = -2 * s3 + 3 * s2;
  st.w[3] = dt * (s3 - s2);
  st.dw[0] = (6 * s2 - 6 * s) / dt;
  st.dw[1] = 3 * s2 - 4 * s + 1;
  st.dw[2] = (-6 * s2 + 6 * s) / dt;
  st.dw[3] = 3 * s2 - 2 * s;
  return st;
}

// Coefficients c_j(t) and c_j'(t) of the spline polynomial.
void spline_coefficients(double T, int knots, int degree, const Eigen::VectorXd& p, double t,
                         Eigen::VectorXd& c, Eigen::VectorXd& dc) {
  const HermiteStencil st = hermite(T, knots, t);
  c.setZero(degree + 1);
  dc.setZero(degree + 1);
  for (int j = 0; j <= degree; ++j) {
    const int base = j * 2 * knots + 2 * st.interval;
    for (int q = 0; q < 4; ++q) {
      c[j] += st.w[q] * p[base + q];
      dc[j] += st.dw[q] * p[base + q];
    }
  }
}

}  // namespace

CylinderSubsolution::CylinderSubsolution(Eigen::MatrixXd directions, ZetaFn zeta, ZetaFn zeta_t,
                                         ZetaGradFn zeta_y)
    : directions_(std::move(directions)),
      zeta_(std::move(zeta)),
      zeta_t_(std::move(zeta_t)),
      zeta_y_(std::move(zeta_y)),
      description_(std::make_shared<Json>(Json{{"family", "generic"}})) {
  if (directions_.rows() < 1 || directions_.cols() < 1)
    throw InputError("cylinder function: need k >= 1 directions in R^n, n >= 1");
  if (!directions_.allFinite()) throw InputError("cylinder function: directions must be finite");
  if (!zeta_ || !zeta_t_ || !zeta_y_) throw InputError("cylinder function: missing callable");
}

CylinderSubsolution CylinderSubsolution::canonical(const DeGiorgiParams& params) {
  const int n = static_cast<int>(params.x0.size());
  const double a = params.a;
  const EnergyModel energy = params.energy;
  CylinderSubsolution xi(
      Eigen::MatrixXd::Identity(n, n),
      [=](double t, const Eigen::VectorXd& y) { return std::exp(-a * t) * energy.eval(t, y); },
      [=](double t, const Eigen::VectorXd& y) {
        return std::exp(-a * t) * (energy.dt(t, y) - a * energy.eval(t, y));
      },
      [=](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return std::exp(-a * t) * energy.grad(t, y).components;
      });
  *xi.description_ = Json{{"family", "canonical"}, {"a", a}};
  return xi;
}

CylinderSubsolution CylinderSubsolution::constant(int dim, double value) {
  CylinderSubsolution xi(
      Eigen::MatrixXd::Identity(1, dim).eval(), [=](double, const Eigen::VectorXd&) { return value; },
      [](double, const Eigen::VectorXd&) { return 0.0; },
      [](double, const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(1); });
  *xi.description_ = Json{{"family", "constant"}, {"value", value}};
  return xi;
}

CylinderSubsolution CylinderSubsolution::spline_polynomial(double T, int knots, int degree,
                                                           Eigen::VectorXd direction,
                                                           Eigen::VectorXd params) {
  if (!(T > 0.0) || knots < 2 || degree < 0)
    throw InputError("spline polynomial: need T > 0, knots >= 2, degree >= 0");
  if (params.size() != 2 * knots * (degree + 1))
    throw InputError("spline polynomial: expected 2 knots (degree + 1) parameters");
  if (!params.allFinite()) throw InputError("spline polynomial: parameters must be finite");
  auto eval = [=](double t, const Eigen::VectorXd& y, int which) -> Eigen::VectorXd {
    Eigen::VectorXd c;
    Eigen::VectorXd dc;
    spline_coefficients(T, knots, degree, params, t, c, dc);
    double v = 0.0;
    double vt = 0.0;
    double vy = 0.0;
    double pw = 1.0;
    double pwm = 0.0;
    for (int j = 0; j <= degree; ++j) {
      vy += j * c[j] * pwm;
      v += c[j] * pw;
      vt += dc[j] * pw;
      pwm = pw;
      pw *= y[0];
    }
    Eigen::VectorXd out(1);
    out[0] = which == 0 ? v : (which == 1 ? vt : vy);
    return out;
  };
  CylinderSubsolution xi(
      direction.transpose(), [=](double t, const Eigen::VectorXd& y) { return eval(t, y, 0)[0]; },
      [=](double t, const Eigen::VectorXd& y) { return eval(t, y, 1)[0]; },
      [=](double t, const Eigen::VectorXd& y) { return eval(t, y, 2); });
  *xi.description_ = Json{{"family", "spline_polynomial"},
                          {"T", T},
                          {"knots", knots},
                          {"degree", degree},
                          {"direction", std::vector<double>(direction.data(), direction.data() + direction.size())},
                          {"params", std::vector<double>(params.data(), params.data() + params.size())}};
  return xi;
}

double CylinderSubsolution::value(double t, const Eigen::VectorXd& x) const {
  return zeta_(t, directions_ * x);
}

double CylinderSubsolution::dt(double t, const Eigen::VectorXd& x) const {
  return zeta_t_(t, directions_ * x);
}

Eigen::VectorXd CylinderSubsolution::grad_x(double t, const Eigen::VectorXd& x) const {
  return directions_.transpose() * zeta_y_(t, directions_ * x);
}

CylinderSubsolution CylinderSubsolution::plus(double c) const {
  CylinderSubsolution out = *this;
  const ZetaFn base = zeta_;
  out.zeta_ = [=](double t, const Eigen::VectorXd& y) { return base(t, y) + c; };
  out.description_ = std::make_shared<Json>(Json{{"family", "offset"}, {"offset", c}, {"base", *description_}});
  return out;
}

CylinderSubsolution CylinderSubsolution::perturbed(double eps, double T) const {
  CylinderSubsolution out = *this;
  const ZetaFn base = zeta_;
  const ZetaFn base_t = zeta_t_;
  out.zeta_ = [=](double t, const Eigen::VectorXd& y) { return base(t, y) + eps * (t - T - 1.0); };
  out.zeta_t_ = [=](double t, const Eigen::VectorXd& y) { return base_t(t, y) + eps; };
  out.description_ = std::make_shared<Json>(
      Json{{"family", "perturbed"}, {"eps", eps}, {"T", T}, {"base", *description_}});
  return out;
}

CylinderSubsolution::Bounds CylinderSubsolution::bounds(
    const std::vector<std::pair<double, Eigen::VectorXd>>& samples) const {
  Bounds b;
  for (const auto& [t, x] : samples) {
    b.value = std::max(b.value, std::abs(value(t, x)));
    b.dt = std::max(b.dt, std::abs(dt(t, x)));
    b.grad = std::max(b.grad, grad_x(t, x).norm());
  }
  return b;
}

std::vector<std::pair<double, Eigen::VectorXd>> SampleSpec::points(double T,
                                                                   const Eigen::VectorXd& x0) const {
  const int n = static_cast<int>(x0.size());
  if (n > 10) throw InputError("sample spec: at most 10 dimensions");
  std::vector<std::pair<double, Eigen::VectorXd>> pts;
  int extra = 0;
  if (n == 1) {
    for (int i = 0; i < grid_t; ++i) {
      const double t = grid_t > 1 ? T * i / (grid_t - 1) : 0.0;
      for (int j = 0; j < grid_x; ++j) {
        Eigen::VectorXd x(1);
        x[0] = x0[0] - radius + (grid_x > 1 ? 2.0 * radius * j / (grid_x - 1) : radius);
        pts.emplace_back(t, std::move(x));
      }
    }
  } else {
    extra = grid_t * grid_x;
  }
  for (long i = 1; i <= quasi_random + extra; ++i) {
    const double t = T * radical_inverse(i, kPrimes[0]);
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d)
      x[d] = x0[d] - radius + 2.0 * radius * radical_inverse(i, kPrimes[d + 1]);
    pts.emplace_back(t, std::move(x));
  }
  return pts;
}

FeasibilityReport check_hj_feasible(const DeGiorgiParams& params, const CylinderSubsolution& xi,
                                    const SampleSpec& spec, double tol_feas) {
  if (xi.dim() != params.x0.size()) throw InputError("check_hj_feasible: dimension mismatch");
  FeasibilityReport rep;
  rep.tol_feas = tol_feas;
  rep.max_violation_hj = -std::numeric_limits<double>::infinity();
  rep.max_violation_terminal = -std::numeric_limits<double>::infinity();
  const double a = params.a;
  const double T = params.T;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [t, x] : spec.points(T, params.x0)) {
    const double e = std::exp(-a * t);
    const DualVector z(-xi.grad_x(t, x) / e);
    const double lhs = -xi.dt(t, x) + e * params.pot.conjugate(t, x, z);
    const double rhs = e * (slope(params.energy, params.pot, t, x) +
                            a * params.energy.eval(t, x) - params.energy.dt(t, x));
    const double v_hj = lhs - rhs;
    const double v_term = xi.value(T, x) - std::exp(-a * T) * params.energy.eval(T, x);
    rep.max_violation_hj = std::max(rep.max_violation_hj, v_hj);
    rep.max_violation_terminal = std::max(rep.max_violation_terminal, v_term);
    if (std::max(v_hj, v_term) > worst || std::isnan(v_hj)) {
      worst = std::max(v_hj, v_term);
      rep.worst_t = std::isnan(v_hj) || v_hj >= v_term ? t : T;
      rep.worst_x = x;
    }
    ++rep.samples_checked;
    if (std::isnan(v_hj) || std::isnan(v_term)) {
      rep.max_violation_hj = std::numeric_limits<double>::infinity();
      break;
    }
  }
  rep.feasible = rep.max_violation_hj <= tol_feas && rep.max_violation_terminal <= tol_feas;
  return rep;
}

BackwardBoundReport check_backward_bound(const DeGiorgiParams& params,
                                         const CylinderSubsolution& xi, const SampleSpec& spec,
                                         double tol) {
  BackwardBoundReport rep;
  const FeasibilityReport feas = check_hj_feasible(params, xi, spec);
  rep.vacuous = !feas.feasible;
  const double a = params.a;
  const double T = params.T;
  const auto pts = spec.points(T, params.x0);
  rep.max_excess = -std::numeric_limits<double>::infinity();
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& [t, x] : pts) {
    const double excess = xi.value(t, x) - std::exp(-a * t) * params.energy.eval(t, x);
    rep.max_excess = std::max(rep.max_excess, excess);
    rep.min_slack = std::min(rep.min_slack, -excess);
  }
  rep.holds = rep.max_excess <= tol;
  for (const double eps : {1e-2, 1e-3}) {
    const FeasibilityReport pf = check_hj_feasible(params, xi.perturbed(eps, T), spec);
    PerturbationCheck pc;
    pc.eps = eps;
    pc.min_margin_hj = -pf.max_violation_hj;
    pc.min_margin_terminal = -pf.max_violation_terminal;
    pc.ok = pc.min_margin_hj >= eps / 2 && pc.min_margin_terminal >= eps / 2;
    rep.perturbations.push_back(pc);
  }
  return rep;
}

double dual_value(const DeGiorgiParams& params, const CylinderSubsolution& xi,
                  const Eigen::MatrixXd& points, const Eigen::VectorXd& mu0) {
  if (points.rows() != mu0.size() || points.cols() != xi.dim())
    throw InputError("dual_value: points and mu0 do not match");
  double v = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (mu0[i] == 0.0) continue;
    const Eigen::VectorXd x = points.row(i).transpose();
    v += (xi.value(0.0, x) - params.energy.eval(0.0, x)) * mu0[i];
  }
  return v;
}

double dual_value(const DeGiorgiParams& params, const CylinderSubsolution& xi) {
  return dual_value(params, xi, params.x0.transpose(), Eigen::VectorXd::Ones(1));
}

DualResult maximize_dual(const DeGiorgiParams& params, const DualFamilySpec& family,
                         const DualOptions& opts) {
  if (params.x0.size() != 1) throw InputError("maximize_dual: n = 1 only");
  if (params.pot.family() == PotentialFamily::Custom)
    throw InputError("maximize_dual: needs a closed-form conjugate");
  const int K = family.knots;
  const int d = family.degree;
  if (K < 2 || d < 0) throw InputError("maximize_dual: need knots >= 2, degree >= 0");
  const int np = 2 * K * (d + 1);
  if (np > family.max_params) throw InputError("maximize_dual: family exceeds the parameter cap");

  const double a = params.a;
  const double T = params.T;
  const double x0 = params.x0[0];
  const ScalarPotential sc{params.pot};
  const int local = 4 * (d + 1);

  // Each constraint touches the 4 Hermite parameters of its interval per degree.
  struct Row {
    int first = 0;  // parameter offset of the interval
    Eigen::VectorXd dxi_t;  // local gradient of d_t xi
    Eigen::VectorXd dxi_x;  // local gradient of d_x xi (or of xi for terminal rows)
    double rhs = 0.0;
    double scale = 1.0;  // e^{at} / friction
    double weight = 1.0;  // e^{-at} friction
    bool terminal = false;
  };
  auto make_row = [&](double t, double x, bool terminal) {
    const HermiteStencil st = hermite(T, K, t);
    Row r;
    r.first = 2 * st.interval;
    r.dxi_t = Eigen::VectorXd::Zero(local);
    r.dxi_x = Eigen::VectorXd::Zero(local);
    double pw = 1.0;
    double pwm = 0.0;
    for (int j = 0; j <= d; ++j) {
      for (int q = 0; q < 4; ++q) {
        r.dxi_t[4 * j + q] = st.dw[q] * pw;
        r.dxi_x[4 * j + q] = terminal ? st.w[q] * pw : j * st.w[q] * pwm;
      }
      pwm = pw;
      pw *= x;
    }
    const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
    r.terminal = terminal;
    if (terminal) {
      r.rhs = std::exp(-a * T) * params.energy.eval(T, xv);
    } else {
      const double friction = params.pot.friction_at(t, xv);
      r.scale = std::exp(a * t) / friction;
      r.weight = std::exp(-a * t) * friction;
      r.rhs = std::exp(-a * t) * (slope(params.energy, params.pot, t, xv) + params.pot.shift() +
                                  a * params.energy.eval(t, xv) - params.energy.dt(t, xv));
    }
    return r;
  };
  const auto pts = opts.samples.points(T, params.x0);
  std::vector<Row> rows;
  rows.reserve(pts.size() + 512);
  std::vector<double> terminal_x;
  for (const auto& [t, x] : pts) {
    rows.push_back(make_row(t, x[0], false));
    terminal_x.push_back(x[0]);
  }
  std::sort(terminal_x.begin(), terminal_x.end());
  terminal_x.erase(std::unique(terminal_x.begin(), terminal_x.end()), terminal_x.end());
  for (const double x : terminal_x) rows.push_back(make_row(T, x, true));

  auto gather = [&](const Eigen::VectorXd& p, const Row& r) {
    Eigen::VectorXd loc(local);
    for (int j = 0; j <= d; ++j)
      for (int q = 0; q < 4; ++q) loc[4 * j + q] = p[j * 2 * K + r.first + q];
    return loc;
  };
  auto index = [&](const Row& r, int l) { return (l / 4) * 2 * K + r.first + l % 4; };
  // violation and its local gradient; curvature factor for the Hessian
  auto violation = [&](const Eigen::VectorXd& p, const Row& r, Eigen::VectorXd* grad,
                       double* curv) {
    const Eigen::VectorXd loc = gather(p, r);
    if (r.terminal) {
      if (grad) *grad = r.dxi_x;
      if (curv) *curv = 0.0;
      return r.dxi_x.dot(loc) - r.rhs;
    }
    const double z = -r.scale * r.dxi_x.dot(loc);
    if (grad) *grad = -r.dxi_t - sc.conj_grad(z) * r.dxi_x;
    if (curv) *curv = r.scale * sc.conj_hess(z);
    return -r.dxi_t.dot(loc) + r.weight * sc.conj(z) - r.rhs;
  };

  Eigen::VectorXd objective_grad = Eigen::VectorXd::Zero(np);
  {
    const Row r0 = make_row(0.0, x0, true);
    for (int l = 0; l < local; ++l) objective_grad[index(r0, l)] -= r0.dxi_x[l];
  }
  // f(p) = -xi(0, x0) + weight sum max(0, v_i)^2, convex in p
  auto penalized = [&](const Eigen::VectorXd& p, double weight) {
    double f = objective_grad.dot(p);
    for (const Row& r : rows) {
      const double v = violation(p, r, nullptr, nullptr);
      if (v > 0.0) f += weight * v * v;
    }
    return f;
  };

  Eigen::VectorXd p = Eigen::VectorXd::Zero(np);
  double damping = 1.0;
  int iterations = 0;
  Eigen::VectorXd g(np);
  Eigen::MatrixXd H(np, np);
  Eigen::VectorXd lg(local);
  // damped Newton on the penalized objective
  auto solve_round = [&](double weight) {
    double f = penalized(p, weight);
    for (int it = 0; it < opts.iterations_per_round; ++it) {
      g = objective_grad;
      H.setZero();
      for (const Row& r : rows) {
        double curv = 0.0;
        const double v = violation(p, r, &lg, &curv);
        if (!(v > 0.0)) continue;
        for (int i = 0; i < local; ++i) {
          const int gi = index(r, i);
          g[gi] += 2.0 * weight * v * lg[i];
          for (int j = 0; j < local; ++j)
            H(gi, index(r, j)) +=
                2.0 * weight * (lg[i] * lg[j] + v * curv * r.dxi_x[i] * r.dxi_x[j]);
        }
      }
      ++iterations;
      bool accepted = false;
      for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
        Eigen::MatrixXd M = H;
        M.diagonal().array() += damping;
        const Eigen::VectorXd step = -M.ldlt().solve(g);
        const Eigen::VectorXd trial = p + step;
        const double ft = penalized(trial, weight);
        if (std::isfinite(ft) && ft < f) {
          const double decrease = f - ft;
          p = trial;
          f = ft;
          damping = std::max(damping / 3.0, 1e-12);
          accepted = true;
          if (decrease <= 1e-15 * (1.0 + std::abs(f))) return;
        } else {
          damping *= 5.0;
        }
      }
      if (!accepted) return;
    }
  };

  // Upper bound of the violation between grid nodes: on each cell edge the
  // violation lies below the parabola through the nodal values whose
  // curvature is the larger second difference at the edge ends. Returns the
  // bound and the (t, x) where each cell attains it.
  struct CellBound {
    double bound;
    double t;
    double x;
  };
  const int nt = opts.samples.grid_t;
  const int nx = opts.samples.grid_x;
  const double ht = nt > 1 ? T / (nt - 1) : T;
  const double hx = nx > 1 ? 2.0 * opts.samples.radius / (nx - 1) : 0.0;
  auto cell_bounds = [&] {
    std::vector<CellBound> out;
    if (nt < 3 || nx < 3) return out;
    Eigen::MatrixXd v(nt, nx);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nx; ++j)
        v(i, j) = violation(p, rows[static_cast<std::size_t>(i * nx + j)], nullptr, nullptr);
    Eigen::MatrixXd d2t(nt, nx);
    Eigen::MatrixXd d2x(nt, nx);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nx; ++j) {
        const int ic = std::clamp(i, 1, nt - 2);
        const int jc = std::clamp(j, 1, nx - 2);
        d2t(i, j) = std::abs(v(ic + 1, j) - 2 * v(ic, j) + v(ic - 1, j));
        d2x(i, j) = std::abs(v(i, jc + 1) - 2 * v(i, jc) + v(i, jc - 1));
      }
    // max over s in [0, 1] of the parabola, with its argmax
    auto parabola = [](double v0, double v1, double D) -> std::pair<double, double> {
      if (D > 0.0) {
        const double s = 0.5 + (v1 - v0) / D;
        if (s > 0.0 && s < 1.0) return {v0 + (v1 - v0) * s + 0.5 * D * s * (1.0 - s), s};
      }
      return v0 >= v1 ? std::pair{v0, 0.0} : std::pair{v1, 1.0};
    };
    for (int i = 0; i + 1 < nt; ++i)
      for (int j = 0; j + 1 < nx; ++j) {
        const double Dx = d2x.block(i, j, 2, 2).maxCoeff();
        const double Dt = d2t.block(i, j, 2, 2).maxCoeff();
        const auto [lower, sl] = parabola(v(i, j), v(i, j + 1), Dx);
        const auto [upper, su] = parabola(v(i + 1, j), v(i + 1, j + 1), Dx);
        const auto [b, st] = parabola(lower, upper, Dt);
        const double sx = st < 0.5 ? sl : su;
        out.push_back({b, (i + st) * ht, x0 - opts.samples.radius + (j + sx) * hx});
      }
    return out;
  };

  double weight = opts.initial_weight;
  for (int round = 0; round < opts.rounds; ++round, weight *= opts.weight_growth) solve_round(weight);
  weight /= opts.weight_growth;
  // Exchange passes: cells whose interior may be violated contribute their
  // worst point as a new constraint.
  for (int pass = 0; pass < opts.exchange_passes; ++pass) {
    int added = 0;
    for (const CellBound& c : cell_bounds()) {
      if (c.bound <= 0.1 * opts.tol_feas) continue;
      rows.push_back(make_row(c.t, c.x, false));
      ++added;
    }
    if (added == 0) break;
    solve_round(weight);
  }

  const Eigen::VectorXd direction = Eigen::VectorXd::Ones(1);
  const CylinderSubsolution raw = CylinderSubsolution::spline_polynomial(T, K, d, direction, p);
  const FeasibilityReport raw_rep = check_hj_feasible(params, raw, opts.samples, opts.tol_feas);
  double interp_bound = -std::numeric_limits<double>::infinity();
  for (const CellBound& c : cell_bounds()) interp_bound = std::max(interp_bound, c.bound);
  double extra_rows = -std::numeric_limits<double>::infinity();
  for (std::size_t r = pts.size() + terminal_x.size(); r < rows.size(); ++r)
    extra_rows = std::max(extra_rows, violation(p, rows[r], nullptr, nullptr));
  // xi + eps (t - T - 1) gains eps of slack in both inequalities
  const double worst = std::max(
      {raw_rep.max_violation_hj, raw_rep.max_violation_terminal, interp_bound, extra_rows});
  if (!std::isfinite(worst)) throw InfeasibleFamilyError("maximize_dual: no feasible member found");
  const double eps = std::max(worst, 0.0);
  DualResult out{eps > 0.0 ? raw.perturbed(eps, T) : raw, 0.0, {}, eps, false, iterations};
  out.feasibility = check_hj_feasible(params, out.certificate, opts.samples, opts.tol_feas);
  if (!out.feasibility.feasible)
    throw InfeasibleFamilyError("maximize_dual: restored certificate still violates the constraints");
  out.value = dual_value(params, out.certificate);
  out.falsified = out.value > opts.tol_dual;
  return out;
}

nlohmann::json to_json(const FeasibilityReport& r) {
  Json j{{"max_violation_hj", r.max_violation_hj},
         {"max_violation_terminal", r.max_violation_terminal},
         {"worst_t", r.worst_t},
         {"worst_x", std::vector<double>(r.worst_x.data(), r.worst_x.data() + r.worst_x.size())},
         {"feasible", r.feasible},
         {"samples_checked", r.samples_checked},
         {"tol_feas", r.tol_feas}};
  return j;
}

nlohmann::json to_json(const CylinderSubsolution& xi, const FeasibilityReport& report,
                       const CylinderSubsolution::Bounds& bounds) {
  Json dirs = Json::array();
  for (int i = 0; i < xi.k(); ++i) {
    const Eigen::VectorXd row = xi.directions().row(i).transpose();
    dirs.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return Json{{"k", xi.k()},
              {"directions", dirs},
              {"zeta", xi.description()},
              {"bounds", {{"value", bounds.value}, {"dt", bounds.dt}, {"grad", bounds.grad}}},
              {"feasibility", to_json(report)}};
}

}  // namespace dgflow
