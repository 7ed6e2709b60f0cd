#include "dgflow/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

struct LineSearchResult {
  bool ok = false;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

LineSearchResult backtrack(const Objective& f, const Eigen::VectorXd& x, double fx,
                           const Eigen::VectorXd& g, const Eigen::VectorXd& d, double step,
                           double increase_tol) {
  constexpr double c1 = 1e-4;
  const double slope = g.dot(d);
  LineSearchResult out;
  if (!(slope < 0.0)) return out;
  Eigen::VectorXd grad_new(x.size());
  for (int k = 0; k < 60; ++k) {
    Eigen::VectorXd trial = x + step * d;
    const double ft = f(trial, grad_new);
    if (std::isfinite(ft) && ft <= fx + c1 * step * slope + increase_tol && grad_new.allFinite()) {
      out.ok = true;
      out.value = ft;
      out.x = std::move(trial);
      out.grad = grad_new;
      return out;
    }
    step *= 0.5;
  }
  return out;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts) {
  LbfgsResult res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  if (!std::isfinite(fx)) throw InputError("lbfgs: objective is not finite at the initial point");

  std::deque<Eigen::VectorXd> S;
  std::deque<Eigen::VectorXd> Y;
  std::deque<double> rho;
  res.history.push_back({0, fx, g.norm()});
  int flat_steps = 0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double gnorm = g.norm();
    if (gnorm <= opts.gtol) {
      res.converged = true;
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      alpha[ui] = rho[ui] * S[ui].dot(q);
      q -= alpha[ui] * Y[ui];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    Eigen::VectorXd r = gamma * q;
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(r);
      r += (alpha[i] - beta) * S[i];
    }
    Eigen::VectorXd d = -r;

    const double first_step = S.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    LineSearchResult ls = backtrack(f, x, fx, g, d, first_step, opts.increase_tol);
    if (!ls.ok) {
      S.clear();
      Y.clear();
      rho.clear();
      ls = backtrack(f, x, fx, g, -g, std::min(1.0, 1.0 / gnorm), opts.increase_tol);
      if (!ls.ok) throw StagnationError("lbfgs: no acceptable step along any direction", x, fx);
    }
    const Eigen::VectorXd s = ls.x - x;
    const Eigen::VectorXd y = ls.grad - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double change = std::abs(ls.value - fx);
    x = std::move(ls.x);
    g = std::move(ls.grad);
    fx = ls.value;
    res.history.push_back({it + 1, fx, g.norm()});
    flat_steps = change <= 1e-16 * (1.0 + std::abs(fx)) ? flat_steps + 1 : 0;
    if (flat_steps >= 25) {
      ++it;
      break;
    }
  }
  res.x = std::move(x);
  res.value = fx;
  res.grad_norm = g.norm();
  res.iterations = it;
  res.converged = res.converged || res.grad_norm <= opts.gtol;
  return res;
}

}  // namespace dgflow
