#include "dgflow/measure_relaxation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "dgflow/errors.hpp"
#include "scalar_potential.hpp"

namespace dgflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Scalar = ScalarPotential;

// Per-slab weights and running costs of the discrete functional.
struct Costs {
  Eigen::MatrixXd w;       // Nt x (Nx+1): tau e^{-a t} friction at faces
  Eigen::MatrixXd face;    // Nt x (Nx+1): tau e^{-a t} (S + a phi - d_t phi) at faces
  Eigen::MatrixXd center;  // Nt x Nx: same at centers
  Eigen::VectorXd terminal;  // e^{-aT} phi(T, c_i)
  Eigen::VectorXd initial;   // phi(0, c_i)
  double psi_at_zero = 0.0;
};

Costs compute_costs(const DeGiorgiParams& params, const SpaceTimeGrid& grid) {
  if (params.x0.size() != 1) throw InputError("measure relaxation supports n = 1 only");
  const auto& pot = params.pot;
  const auto& energy = params.energy;
  const Scalar sc{pot};
  Costs c;
  c.w.resize(grid.Nt, grid.Nx + 1);
  c.face.resize(grid.Nt, grid.Nx + 1);
  c.center.resize(grid.Nt, grid.Nx);
  c.terminal.resize(grid.Nx);
  c.initial.resize(grid.Nx);
  Eigen::VectorXd x(1);
  auto running = [&](double t, double pos, double& friction) {
    x[0] = pos;
    friction = pot.friction_at(t, x);
    const double g = -energy.grad(t, x).components[0] / friction;
    const double S = friction * sc.conj(g);
    return S + params.a * energy.eval(t, x) - energy.dt(t, x);
  };
  for (int k = 0; k < grid.Nt; ++k) {
    const double t = (k + 0.5) * grid.tau();
    const double e = grid.tau() * std::exp(-params.a * t);
    double A = 1.0;
    for (int f = 0; f <= grid.Nx; ++f) {
      c.face(k, f) = e * running(t, grid.face(f), A);
      c.w(k, f) = e * A;
    }
    for (int i = 0; i < grid.Nx; ++i) c.center(k, i) = e * running(t, grid.center(i), A);
  }
  for (int i = 0; i < grid.Nx; ++i) {
    x[0] = grid.center(i);
    c.terminal[i] = std::exp(-params.a * params.T) * energy.eval(params.T, x);
    c.initial[i] = energy.eval(0.0, x);
  }
  c.psi_at_zero = sc.psi(0.0);
  return c;
}

double total(const Eigen::VectorXd& v) { return v.sum(); }

Eigen::RowVectorXd divergence(const Eigen::RowVectorXd& nu) {
  const auto Nx = nu.size() - 1;
  return nu.tail(Nx) - nu.head(Nx);
}

double dual_projection(const SpaceTimeGrid& grid, const Costs& c, const Scalar& sc,
                       const Eigen::MatrixXd& xi, const Eigen::VectorXd& mu0,
                       Eigen::MatrixXd& out) {
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  const double s = grid.tau() / grid.h();
  out = xi;
  out.row(Nt) = xi.row(Nt).cwiseMin(c.terminal.transpose());
  Eigen::VectorXd face_cost(Nx + 1);
  for (int k = Nt - 1; k >= 0; --k) {
    for (int f = 0; f <= Nx; ++f) {
      if (f == 0 || f == Nx) {
        face_cost[f] = c.face(k, f) + c.w(k, f) * c.psi_at_zero;
      } else {
        const double g = s * (out(k + 1, f) - out(k + 1, f - 1));
        const double w = c.w(k, f);
        face_cost[f] = c.face(k, f) - w * sc.conj(-g / w);
      }
    }
    for (int i = 0; i < Nx; ++i) {
      const double bound = std::min({c.center(k, i), face_cost[i], face_cost[i + 1]});
      out(k, i) = std::min(xi(k, i), out(k + 1, i) + bound);
    }
  }
  return (out.row(0).transpose() - c.initial).dot(mu0);
}

double energy_of(const SpaceTimeGrid& grid, const Costs& c, const Scalar& sc,
                 const GridMeasureTriple& tr) {
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  double E = c.terminal.dot(tr.m_end) - c.initial.dot(tr.mu0);
  const Eigen::MatrixXd z = tr.center_mass();
  for (int k = 0; k < Nt; ++k) {
    for (int i = 0; i < Nx; ++i) E += c.center(k, i) * z(k, i);
    for (int f = 0; f <= Nx; ++f) {
      const double rho = tr.face_mass(k, f);
      const double nu = tr.nu(k, f);
      if ((f == 0 || f == Nx) && nu != 0.0) return kInf;
      const double p = sc.perspective(rho, nu);
      if (!std::isfinite(p)) return kInf;
      E += c.face(k, f) * rho + c.w(k, f) * p;
    }
  }
  return E;
}

// Primal and dual blocks of the saddle-point iteration.
struct Primal {
  Eigen::MatrixXd A, Z, B;  // shares, Nt x Nx
  Eigen::MatrixXd R, V;     // face mass and momentum, Nt x (Nx+1)
  Eigen::RowVectorXd M;     // terminal mass
};

struct Dual {
  Eigen::MatrixXd Y;  // continuity rows, (Nt+1) x Nx
  Eigen::MatrixXd H;  // face-mass split rows, Nt x (Nx+1)
};

class SaddleOperator {
 public:
  SaddleOperator(int Nt, int Nx, double s) : Nt_(Nt), Nx_(Nx), s_(s) {}

  Dual apply(const Primal& u) const {
    Dual out{Eigen::MatrixXd(Nt_ + 1, Nx_), Eigen::MatrixXd(Nt_, Nx_ + 1)};
    const Eigen::MatrixXd mu = u.A + u.Z + u.B;
    out.Y.row(0) = mu.row(0);
    for (int k = 1; k < Nt_; ++k)
      out.Y.row(k) = mu.row(k) - mu.row(k - 1) + s_ * divergence(u.V.row(k - 1));
    out.Y.row(Nt_) = u.M - mu.row(Nt_ - 1) + s_ * divergence(u.V.row(Nt_ - 1));
    out.H = u.R;
    out.H.leftCols(Nx_) -= u.A;
    out.H.rightCols(Nx_) -= u.B;
    return out;
  }

  Primal adjoint(const Dual& y) const {
    Primal g;
    const Eigen::MatrixXd gmu = y.Y.topRows(Nt_) - y.Y.bottomRows(Nt_);
    g.Z = gmu;
    g.A = gmu - y.H.leftCols(Nx_);
    g.B = gmu - y.H.rightCols(Nx_);
    g.R = y.H;
    g.V = Eigen::MatrixXd::Zero(Nt_, Nx_ + 1);
    g.V.middleCols(1, Nx_ - 1) =
        s_ * (y.Y.bottomRows(Nt_).leftCols(Nx_ - 1) - y.Y.bottomRows(Nt_).rightCols(Nx_ - 1));
    g.M = y.Y.row(Nt_);
    return g;
  }

  double norm_estimate(int iterations, unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto rnd = [&](int r, int c) {
      Eigen::MatrixXd m(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
      return m;
    };
    Primal u{rnd(Nt_, Nx_), rnd(Nt_, Nx_), rnd(Nt_, Nx_), rnd(Nt_, Nx_ + 1),
             rnd(Nt_, Nx_ + 1), rnd(1, Nx_)};
    u.V.col(0).setZero();
    u.V.col(Nx_).setZero();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      const double n = norm(u);
      scale(u, 1.0 / n);
      Primal next = adjoint(apply(u));
      lambda = norm(next);
      u = std::move(next);
    }
    return std::sqrt(lambda);
  }

  static double norm(const Primal& u) {
    return std::sqrt(u.A.squaredNorm() + u.Z.squaredNorm() + u.B.squaredNorm() +
                     u.R.squaredNorm() + u.V.squaredNorm() + u.M.squaredNorm());
  }
  static void scale(Primal& u, double f) {
    u.A *= f;
    u.Z *= f;
    u.B *= f;
    u.R *= f;
    u.V *= f;
    u.M *= f;
  }

 private:
  int Nt_;
  int Nx_;
  double s_;
};

// Builds an exactly feasible triple from a primal iterate. Face masses are
// taken from the iterate as far as the restored cells can supply them and move
// with at most the iterate's velocity; masses are transported forward from mu0
// and outflows are limited so that no cell goes negative.
GridMeasureTriple restore(const SpaceTimeGrid& grid, const Primal& u, const Eigen::VectorXd& mu0) {
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  const double s = grid.tau() / grid.h();
  const double mass = total(mu0);
  GridMeasureTriple tr;
  tr.mu.resize(Nt, Nx);
  tr.left = Eigen::MatrixXd::Zero(Nt, Nx);
  tr.right = Eigen::MatrixXd::Zero(Nt, Nx);
  tr.nu = Eigen::MatrixXd::Zero(Nt, Nx + 1);
  tr.mu0 = mu0;
  Eigen::VectorXd cur = mu0;
  Eigen::VectorXd nu(Nx + 1);
  for (int k = 0; k < Nt; ++k) {
    tr.mu.row(k) = cur.transpose();
    for (int f = 1; f < Nx; ++f) {
      const double from_left = u.B(k, f - 1);
      const double from_right = u.A(k, f);
      double share_left = from_left + from_right > 0.0 ? from_left / (from_left + from_right) : 0.5;
      if (cur[f - 1] <= 0.0) share_left = 0.0;
      if (cur[f] <= 0.0) share_left = 1.0;
      tr.right(k, f - 1) = u.R(k, f) * share_left;
      tr.left(k, f) = u.R(k, f) * (1.0 - share_left);
    }
    for (int i = 0; i < Nx; ++i) {
      const double used = tr.left(k, i) + tr.right(k, i);
      if (used > cur[i]) {
        const double factor = used > 0.0 ? cur[i] / used : 0.0;
        tr.left(k, i) *= factor;
        tr.right(k, i) *= factor;
      }
    }
    // starved moving faces borrow from the upwind cell
    for (int f = 1; f < Nx; ++f) {
      if (u.V(k, f) == 0.0 || tr.face_mass(k, f) > 0.0) continue;
      const int src = u.V(k, f) > 0.0 ? f - 1 : f;
      const double spare = cur[src] - tr.left(k, src) - tr.right(k, src);
      const double give = std::min(std::max(spare, 0.0), u.R(k, f));
      (src == f - 1 ? tr.right(k, f - 1) : tr.left(k, f)) += give;
    }
    nu.setZero();
    for (int f = 1; f < Nx; ++f)
      if (u.R(k, f) > 0.0) nu[f] = tr.face_mass(k, f) * (u.V(k, f) / u.R(k, f));
    for (int i = 0; i < Nx; ++i) {
      const double out = s * (std::max(nu[i + 1], 0.0) + std::max(-nu[i], 0.0));
      if (out > cur[i]) {
        const double factor = out > 0.0 ? cur[i] / out : 0.0;
        if (nu[i + 1] > 0.0) nu[i + 1] *= factor;
        if (nu[i] < 0.0) nu[i] *= factor;
      }
    }
    tr.nu.row(k) = nu.transpose();
    Eigen::VectorXd next = cur - s * divergence(nu.transpose()).transpose();
    for (int i = 0; i < Nx; ++i) {
      if (next[i] < 0.0) {
        if (next[i] < -1e-12 * (1.0 + mass))
          throw std::logic_error("relaxation restore: negative mass after transport");
        next[i] = 0.0;
      }
    }
    cur = std::move(next);
  }
  tr.m_end = cur;
  return tr;
}

}  // namespace

SpaceTimeGrid::SpaceTimeGrid(double T_, int Nt_, double x_min_, double x_max_, int Nx_)
    : T(T_), Nt(Nt_), x_min(x_min_), x_max(x_max_), Nx(Nx_) {
  if (!(T > 0.0)) throw InputError("grid: T must be positive");
  if (Nt < 8 || Nx < 8) throw InputError("grid: need Nt, Nx >= 8");
  if (!(x_min < x_max)) throw InputError("grid: need x_min < x_max");
}

int SpaceTimeGrid::cell_of(double x) const {
  const int i = static_cast<int>(std::floor((x - x_min) / h()));
  return std::clamp(i, 0, Nx - 1);
}

GridMeasureTriple GridMeasureTriple::stationary(const SpaceTimeGrid& grid,
                                                const Eigen::VectorXd& mu0) {
  if (mu0.size() != grid.Nx) throw InputError("stationary triple: mu0 has wrong length");
  GridMeasureTriple tr;
  tr.mu = mu0.transpose().replicate(grid.Nt, 1);
  tr.left = Eigen::MatrixXd::Zero(grid.Nt, grid.Nx);
  tr.right = Eigen::MatrixXd::Zero(grid.Nt, grid.Nx);
  tr.nu = Eigen::MatrixXd::Zero(grid.Nt, grid.Nx + 1);
  tr.m_end = mu0;
  tr.mu0 = mu0;
  return tr;
}

double GridMeasureTriple::face_mass(int k, int f) const {
  const auto Nx = static_cast<int>(mu.cols());
  double rho = 0.0;
  if (f > 0) rho += right(k, f - 1);
  if (f < Nx) rho += left(k, f);
  return rho;
}

Eigen::VectorXd delta_datum(const SpaceTimeGrid& grid, double x0) {
  if (!grid.contains(x0)) throw OutOfDomainError("x0 outside the grid window");
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(grid.Nx);
  mu0[grid.cell_of(x0)] = 1.0;
  return mu0;
}

Eigen::VectorXd gaussian_datum(const SpaceTimeGrid& grid, double x0, double sigma) {
  if (!grid.contains(x0)) throw OutOfDomainError("x0 outside the grid window");
  if (sigma <= 0.0) sigma = 2.0 * grid.h();
  Eigen::VectorXd mu0(grid.Nx);
  for (int i = 0; i < grid.Nx; ++i) {
    const double d = (grid.center(i) - x0) / sigma;
    mu0[i] = std::exp(-0.5 * d * d);
  }
  return mu0 / mu0.sum();
}

Eigen::MatrixXd ContinuityOperator::apply(const GridMeasureTriple& tr) const {
  const int Nt = grid_.Nt;
  const int Nx = grid_.Nx;
  if (tr.mu.rows() != Nt || tr.mu.cols() != Nx || tr.nu.cols() != Nx + 1 || tr.m_end.size() != Nx ||
      tr.mu0.size() != Nx)
    throw InputError("continuity operator: triple does not match the grid");
  const double s = grid_.tau() / grid_.h();
  Eigen::MatrixXd res(Nt + 1, Nx);
  res.row(0) = tr.mu.row(0) - tr.mu0.transpose();
  for (int k = 1; k < Nt; ++k)
    res.row(k) = tr.mu.row(k) - tr.mu.row(k - 1) + s * divergence(tr.nu.row(k - 1));
  res.row(Nt) = tr.m_end.transpose() - tr.mu.row(Nt - 1) + s * divergence(tr.nu.row(Nt - 1));
  return res;
}

double ContinuityOperator::weak_form(const GridMeasureTriple& triple, const Eigen::MatrixXd& xi) const {
  return -(apply(triple).array() * xi.array()).sum();
}

double ContinuityOperator::scaled_residual(const GridMeasureTriple& triple) const {
  return apply(triple).cwiseAbs().maxCoeff() / std::max(triple.mu0.sum(), 1e-300);
}

ContinuityOperator assemble_continuity_operator(const SpaceTimeGrid& grid) {
  return ContinuityOperator(grid);
}

double evaluate_E(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                  const GridMeasureTriple& triple) {
  if (triple.mu.rows() != grid.Nt || triple.mu.cols() != grid.Nx ||
      triple.left.rows() != grid.Nt || triple.right.rows() != grid.Nt ||
      triple.nu.rows() != grid.Nt || triple.nu.cols() != grid.Nx + 1)
    throw InputError("evaluate_E: triple does not match the grid");
  if ((triple.left.array() < 0.0).any() || (triple.right.array() < 0.0).any() ||
      (triple.center_mass().array() < -1e-12).any() || (triple.m_end.array() < 0.0).any())
    throw InputError("evaluate_E: negative mass");
  const Costs c = compute_costs(params, grid);
  return energy_of(grid, c, Scalar{params.pot}, triple);
}

double discrete_dual_value(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                           const Eigen::MatrixXd& xi, const Eigen::VectorXd& mu0,
                           Eigen::MatrixXd* feasible) {
  const Costs c = compute_costs(params, grid);
  Eigen::MatrixXd out;
  const double d = dual_projection(grid, c, Scalar{params.pot}, xi, mu0, out);
  if (feasible) *feasible = std::move(out);
  return d;
}

std::pair<double, double> perspective_prox_quadratic(double rho, double nu, double gamma_w) {
  // minimize gamma_w nu'^2 / (2 rho') + |rho' - rho|^2 / 2 + |nu' - nu|^2 / 2
  const double C = 0.5 * gamma_w * nu * nu;
  if (rho * gamma_w * gamma_w <= -C) return {0.0, 0.0};
  if (C == 0.0) return {std::max(rho, 0.0), 0.0};
  // f(r) = (r - rho)(r + gamma_w)^2 - C is increasing and convex right of the
  // root; Newton from an upper bound converges monotonically.
  double r = std::max(rho, 0.0) + C / (gamma_w * gamma_w);
  if (rho >= -gamma_w) r = std::min(r, std::max(rho, 0.0) + std::cbrt(C));
  for (int it = 0; it < 200; ++it) {
    const double q = r + gamma_w;
    const double f = (r - rho) * q * q - C;
    const double df = q * q + 2.0 * (r - rho) * q;
    const double step = f / df;
    r -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(r))) break;
  }
  r = std::max(r, 0.0);
  return {r, r * nu / (r + gamma_w)};
}

std::pair<double, double> perspective_prox(const DissipationPotential& pot, double w, double gamma,
                                           double rho, double nu) {
  if (pot.family() == PotentialFamily::QuadraticMetric)
    return perspective_prox_quadratic(rho, nu, gamma * w * pot.weight());
  // prox_{gamma f}(y) = y - gamma proj_K(y / gamma), K = {alpha + w psi0*(beta / w) <= 0}
  const Scalar sc{pot};
  const double ah = rho / gamma;
  const double bh = nu / gamma;
  if (ah + w * sc.conj(bh / w) <= 0.0) return {0.0, 0.0};
  auto g = [&](double beta) {
    const double lam = ah + w * sc.conj(beta / w);
    return beta - bh + lam * sc.conj_grad(beta / w);
  };
  auto dg = [&](double beta) {
    const double z = beta / w;
    const double d = sc.conj_grad(z);
    return 1.0 + d * d + (ah + w * sc.conj(z)) * sc.conj_hess(z) / w;
  };
  // bracket the root, then safeguarded Newton
  double lo = bh;
  double hi = bh;
  double span = 1.0 + std::abs(bh);
  if (g(bh) > 0.0) {
    for (int it = 0; it < 200 && g(lo) > 0.0; ++it, span *= 2.0) lo = bh - span;
  } else {
    for (int it = 0; it < 200 && g(hi) < 0.0; ++it, span *= 2.0) hi = bh + span;
  }
  double beta = bh;
  for (int it = 0; it < 100; ++it) {
    const double gb = g(beta);
    if (gb == 0.0) break;
    if (gb > 0.0) hi = beta; else lo = beta;
    const double slope = dg(beta);
    double next = slope > 0.0 ? beta - gb / slope : 0.5 * (lo + hi);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - beta) <= 1e-14 * (1.0 + std::abs(beta));
    beta = next;
    if (done || hi - lo <= 1e-15 * (1.0 + std::abs(beta))) break;
  }
  const double alpha = -w * sc.conj(beta / w);
  return {std::max(rho - gamma * alpha, 0.0), nu - gamma * beta};
}

RelaxResult solve_relaxed(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                          const RelaxOptions& opts, const Eigen::VectorXd* mu0_in) {
  if (params.x0.size() != 1) throw InputError("solve_relaxed: n = 1 only");
  if (std::abs(grid.T - params.T) > 1e-12 * params.T)
    throw InputError("solve_relaxed: grid horizon differs from T");
  const double x0 = params.x0[0];
  if (!grid.contains(x0)) throw OutOfDomainError("solve_relaxed: x0 outside the grid window");
  const Eigen::VectorXd mu0 =
      mu0_in ? *mu0_in : (opts.gaussian_datum ? gaussian_datum(grid, x0) : delta_datum(grid, x0));
  if (mu0.size() != grid.Nx || (mu0.array() < 0.0).any())
    throw InputError("solve_relaxed: mu0 must be a nonnegative vector over cells");

  const auto start = std::chrono::steady_clock::now();
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  const double s = grid.tau() / grid.h();
  const Costs c = compute_costs(params, grid);
  const Scalar sc{params.pot};
  const SaddleOperator K(Nt, Nx, s);

  RelaxResult result;
  result.operator_norm = K.norm_estimate(50, 7);
  const double L = 1.01 * result.operator_norm;
  const double tau_p = opts.step_ratio / L;
  const double sigma = 1.0 / (opts.step_ratio * L);

  Primal u{Eigen::MatrixXd::Zero(Nt, Nx), mu0.transpose().replicate(Nt, 1),
           Eigen::MatrixXd::Zero(Nt, Nx), Eigen::MatrixXd::Zero(Nt, Nx + 1),
           Eigen::MatrixXd::Zero(Nt, Nx + 1), mu0.transpose()};
  Dual y{Eigen::MatrixXd::Zero(Nt + 1, Nx), Eigen::MatrixXd::Zero(Nt, Nx + 1)};
  const bool quadratic = params.pot.family() == PotentialFamily::QuadraticMetric;
  const double qweight = params.pot.weight();

  double best_gap = kInf;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Primal g = K.adjoint(y);
    Primal next;
    next.A = (u.A - tau_p * g.A).cwiseMax(0.0);
    next.B = (u.B - tau_p * g.B).cwiseMax(0.0);
    next.Z = (u.Z - tau_p * (g.Z + c.center)).cwiseMax(0.0);
    next.M = (u.M - tau_p * (g.M + c.terminal.transpose())).cwiseMax(0.0);
    next.R.resize(Nt, Nx + 1);
    next.V.resize(Nt, Nx + 1);
    for (int k = 0; k < Nt; ++k) {
      for (int f = 0; f <= Nx; ++f) {
        const double rt = u.R(k, f) - tau_p * (g.R(k, f) + c.face(k, f));
        if (f == 0 || f == Nx) {
          next.R(k, f) = std::max(0.0, rt - tau_p * c.w(k, f) * c.psi_at_zero);
          next.V(k, f) = 0.0;
          continue;
        }
        const double vt = u.V(k, f) - tau_p * g.V(k, f);
        const auto [r, v] = quadratic
                                ? perspective_prox_quadratic(rt, vt, tau_p * c.w(k, f) * qweight)
                                : perspective_prox(params.pot, c.w(k, f), tau_p, rt, vt);
        next.R(k, f) = r;
        next.V(k, f) = v;
      }
    }
    Primal bar{2.0 * next.A - u.A, 2.0 * next.Z - u.Z, 2.0 * next.B - u.B,
               2.0 * next.R - u.R, 2.0 * next.V - u.V, 2.0 * next.M - u.M};
    Dual kb = K.apply(bar);
    kb.Y.row(0) -= mu0.transpose();
    y.Y += sigma * kb.Y;
    y.H += sigma * kb.H;
    u = std::move(next);

    const bool last = it == opts.max_iter;
    if (it % opts.check_every == 0 || last) {
      GridMeasureTriple tr = restore(grid, u, mu0);
      const double E = energy_of(grid, c, sc, tr);
      Eigen::MatrixXd xi_hat;
      const Eigen::MatrixXd xi = -y.Y;
      const double D = dual_projection(grid, c, sc, xi, mu0, xi_hat);
      const double gap = E - D;
      result.history.push_back({it, E, gap});
      if (gap < best_gap) {
        best_gap = gap;
        result.triple = std::move(tr);
        result.value = E;
        result.dual_value = D;
        result.duality_gap = gap;
        result.xi = std::move(xi_hat);
      }
      result.iterations = it;
      if (gap <= opts.gap_tol) {
        result.converged = true;
        break;
      }
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > opts.time_limit_s) break;
    }
  }
  return result;
}

GridMeasureTriple lift_trajectory(const SpaceTimeGrid& grid, const Trajectory& traj) {
  if (traj.dim() != 1) throw InputError("lift_trajectory: n = 1 only");
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  const double h = grid.h();
  const double tau = grid.tau();
  std::vector<Eigen::VectorXd> nodes;
  for (int k = 0; k <= Nt; ++k) {
    const double x = traj.at(std::min(k * tau, traj.T()))[0];
    if (x < grid.x_min || x > grid.x_max)
      throw OutOfDomainError("lift_trajectory: curve leaves [x_min, x_max]");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(Nx);
    const double pos = (x - grid.x_min) / h - 0.5;
    const int j = static_cast<int>(std::floor(pos));
    if (j < 0) {
      m[0] = 1.0;
    } else if (j >= Nx - 1) {
      m[Nx - 1] = 1.0;
    } else {
      const double lam = pos - j;
      m[j] = 1.0 - lam;
      m[j + 1] = lam;
    }
    nodes.push_back(std::move(m));
  }
  GridMeasureTriple tr;
  tr.mu.resize(Nt, Nx);
  tr.left = Eigen::MatrixXd::Zero(Nt, Nx);
  tr.right = Eigen::MatrixXd::Zero(Nt, Nx);
  tr.nu = Eigen::MatrixXd::Zero(Nt, Nx + 1);
  tr.mu0 = nodes.front();
  tr.m_end = nodes.back();
  for (int k = 0; k < Nt; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    tr.mu.row(k) = nodes[ku].transpose();
    double before = 0.0;
    double after = 0.0;
    for (int f = 1; f < Nx; ++f) {
      before += nodes[ku][f - 1];
      after += nodes[ku + 1][f - 1];
      tr.nu(k, f) = (h / tau) * (before - after);
    }
    for (int i = 0; i < Nx; ++i) {
      const double l = std::abs(tr.nu(k, i));
      const double r = std::abs(tr.nu(k, i + 1));
      if (l + r > 0.0) {
        tr.left(k, i) = tr.mu(k, i) * l / (l + r);
        tr.right(k, i) = tr.mu(k, i) * r / (l + r);
      }
    }
  }
  return tr;
}

Trajectory reconstruct_characteristic(const SpaceTimeGrid& grid, const GridMeasureTriple& tr,
                                      double x0) {
  const int Nt = grid.Nt;
  const int Nx = grid.Nx;
  const double h = grid.h();
  const double tau = grid.tau();
  const double floor_mass = 1e-12 * tr.mu0.sum() / (static_cast<double>(Nt) * Nx);
  std::vector<double> path{x0};

  auto velocity = [&](double t, double x) {
    if (x < grid.x_min || x > grid.x_max)
      throw ReconstructionDegenerateError("characteristic left the grid window", path);
    const double st = std::clamp(t / tau - 0.5, 0.0, static_cast<double>(Nt - 1));
    const int k0 = std::min(static_cast<int>(std::floor(st)), Nt - 1);
    const int k1 = std::min(k0 + 1, Nt - 1);
    const double wt = st - k0;
    const double sf = (x - grid.x_min) / h;
    const int f_lo = std::max(static_cast<int>(std::ceil(sf - 2.0)), 0);
    const int f_hi = std::min(static_cast<int>(std::floor(sf + 2.0)), Nx);
    const double sc = std::clamp(sf - 0.5, 0.0, static_cast<double>(Nx - 1));
    const int c0 = std::min(static_cast<int>(std::floor(sc)), Nx - 1);
    const int c1 = std::min(c0 + 1, Nx - 1);
    const double wc = sc - c0;
    double rho = 0.0;
    double nu = 0.0;
    double mass = 0.0;
    for (const auto& [k, a] : {std::pair{k0, 1.0 - wt}, std::pair{k1, wt}}) {
      // hat kernel of half-width 2h over faces
      for (int f = f_lo; f <= f_hi; ++f) {
        const double wf = a * std::max(0.0, 1.0 - 0.5 * std::abs(sf - f));
        rho += wf * tr.face_mass(k, f);
        nu += wf * tr.nu(k, f);
      }
      mass += a * ((1.0 - wc) * tr.mu(k, c0) + wc * tr.mu(k, c1));
    }
    if (rho > floor_mass) return nu / rho;
    if (mass > floor_mass) return 0.0;  // mass at rest in the cell interior
    throw ReconstructionDegenerateError("vacuum along the characteristic", path);
  };

  Eigen::MatrixXd nodes(Nt + 1, 1);
  nodes(0, 0) = x0;
  double x = x0;
  for (int k = 0; k < Nt; ++k) {
    const double t = k * tau;
    const double half = x + 0.5 * tau * velocity(t, x);
    x += tau * velocity(t + 0.5 * tau, half);
    nodes(k + 1, 0) = x;
    path.push_back(x);
  }
  return Trajectory(grid.T, std::move(nodes));
}

double discrete_action(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                       const GridMeasureTriple& triple) {
  const Costs c = compute_costs(params, grid);
  const Scalar sc{params.pot};
  double A = 0.0;
  for (int k = 0; k < grid.Nt; ++k)
    for (int f = 1; f < grid.Nx; ++f)
      A += c.w(k, f) * sc.perspective(triple.face_mass(k, f), triple.nu(k, f));
  return A;
}

double action_dual_value(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                         const GridMeasureTriple& triple, const Eigen::MatrixXd& zeta) {
  const Costs c = compute_costs(params, grid);
  const Scalar sc{params.pot};
  double v = 0.0;
  for (int k = 0; k < grid.Nt; ++k)
    for (int f = 1; f < grid.Nx; ++f) {
      const double rho = triple.face_mass(k, f);
      v += zeta(k, f) * triple.nu(k, f);
      if (rho > 0.0) v -= c.w(k, f) * rho * sc.conj(zeta(k, f) / c.w(k, f));
    }
  return v;
}

Eigen::MatrixXd action_maximizer(const DeGiorgiParams& params, const SpaceTimeGrid& grid,
                                 const GridMeasureTriple& triple) {
  const Costs c = compute_costs(params, grid);
  const Scalar sc{params.pot};
  Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(grid.Nt, grid.Nx + 1);
  for (int k = 0; k < grid.Nt; ++k)
    for (int f = 1; f < grid.Nx; ++f) {
      const double rho = triple.face_mass(k, f);
      if (rho > 0.0) zeta(k, f) = c.w(k, f) * sc.grad(triple.nu(k, f) / rho);
    }
  return zeta;
}

}  // namespace dgflow
