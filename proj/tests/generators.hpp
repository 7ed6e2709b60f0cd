#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dgflow/degiorgi.hpp"
#include "dgflow/measure_relaxation.hpp"

namespace gen {

/// Seeded source of random test inputs.
class Gen {
 public:
  explicit Gen(unsigned long seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Brownian-like path from x0: increments of size sigma sqrt(tau) plus a random drift.
  dgflow::Trajectory trajectory(const Eigen::VectorXd& x0, double T, int N, double sigma) {
    Eigen::MatrixXd nodes(N + 1, x0.size());
    nodes.row(0) = x0.transpose();
    const double tau = T / N;
    const Eigen::VectorXd drift = vector(static_cast<int>(x0.size()), -1.0, 1.0);
    for (int k = 1; k <= N; ++k)
      for (Eigen::Index i = 0; i < x0.size(); ++i)
        nodes(k, i) = nodes(k - 1, i) + drift[i] * tau + sigma * std::sqrt(tau) * normal();
    return dgflow::Trajectory(T, std::move(nodes));
  }

  /// Smooth path x0 + sum of a few random sine modes vanishing at t = 0.
  dgflow::Trajectory smooth_trajectory(const Eigen::VectorXd& x0, double T, int N, double amplitude) {
    const int n = static_cast<int>(x0.size());
    const Eigen::VectorXd a1 = vector(n, -amplitude, amplitude);
    const Eigen::VectorXd a2 = vector(n, -amplitude, amplitude);
    return dgflow::Trajectory::sample(
        [&](double t) -> Eigen::VectorXd {
          const double s = t / T;
          return x0 + a1 * std::sin(M_PI * s) + a2 * std::sin(2.5 * M_PI * s);
        },
        T, N);
  }

  /// Random nonnegative triple satisfying the discrete continuity equation:
  /// masses are pushed forward slab by slab with random face fluxes.
  dgflow::GridMeasureTriple feasible_triple(const dgflow::SpaceTimeGrid& grid, const Eigen::VectorXd& mu0) {
    const int Nt = grid.Nt;
    const int Nx = grid.Nx;
    const double s = grid.tau() / grid.h();
    dgflow::GridMeasureTriple tr;
    tr.mu0 = mu0;
    tr.mu = Eigen::MatrixXd::Zero(Nt, Nx);
    tr.left = Eigen::MatrixXd::Zero(Nt, Nx);
    tr.right = Eigen::MatrixXd::Zero(Nt, Nx);
    tr.nu = Eigen::MatrixXd::Zero(Nt, Nx + 1);
    Eigen::VectorXd cur = mu0;
    for (int k = 0; k < Nt; ++k) {
      tr.mu.row(k) = cur.transpose();
      for (int i = 0; i < Nx; ++i) {
        const double l = uniform(0.0, 0.3) * cur[i];
        const double r = uniform(0.0, 0.3) * cur[i];
        tr.left(k, i) = l;
        tr.right(k, i) = r;
      }
      Eigen::VectorXd out = Eigen::VectorXd::Zero(Nx);
      for (int f = 1; f < Nx; ++f) {
        const double R = tr.right(k, f - 1) + tr.left(k, f);
        if (R <= 0.0) continue;
        // flux limited so that neither neighbour goes negative
        const double cap = 0.45 / s;
        const double v = uniform(-cap, cap);
        const double nu = R * v;
        tr.nu(k, f) = nu;
        if (nu > 0) out[f - 1] += s * nu; else out[f] += s * -nu;
      }
      Eigen::VectorXd next = cur;
      for (int i = 0; i < Nx; ++i) next[i] -= s * (tr.nu(k, i + 1) - tr.nu(k, i));
      // reject slabs that would overdraw a cell
      if ((next.array() < 0.0).any() || (out.array() > cur.array() + 1e-15).any()) {
        tr.nu.row(k).setZero();
        next = cur;
      }
      cur = next;
    }
    tr.m_end = cur;
    return tr;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gen
