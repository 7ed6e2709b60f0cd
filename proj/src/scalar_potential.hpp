#pragma once

#include <cmath>
#include <limits>

#include "dgflow/convex_core.hpp"

namespace dgflow {

// Scalar views of psi0 and its conjugate; closed forms where available.
struct ScalarPotential {
  const DissipationPotential& pot;

  double psi(double v) const {
    switch (pot.family()) {
      case PotentialFamily::QuadraticMetric: return 0.5 * pot.weight() * v * v;
      case PotentialFamily::PowerP: return std::pow(std::abs(v), pot.exponent()) / pot.exponent();
      case PotentialFamily::Entropy: return v < 0.0 ? std::numeric_limits<double>::infinity() : (v == 0.0 ? 0.0 : v * (std::log(v) - 1.0));
      case PotentialFamily::Custom: break;
    }
    return pot.base_eval(Eigen::VectorXd::Constant(1, v));
  }
  double grad(double v) const {
    switch (pot.family()) {
      case PotentialFamily::QuadraticMetric: return pot.weight() * v;
      case PotentialFamily::PowerP:
        return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), pot.exponent() - 1.0), v);
      default: break;
    }
    return pot.base_grad(Eigen::VectorXd::Constant(1, v))[0];
  }
  double conj(double z) const {
    switch (pot.family()) {
      case PotentialFamily::QuadraticMetric: return 0.5 * z * z / pot.weight();
      case PotentialFamily::PowerP: {
        const double q = pot.exponent() / (pot.exponent() - 1.0);
        return std::pow(std::abs(z), q) / q;
      }
      case PotentialFamily::Entropy: return std::exp(z);
      case PotentialFamily::Custom: break;
    }
    return pot.base_conjugate(Eigen::VectorXd::Constant(1, z));
  }
  double conj_grad(double z) const {
    switch (pot.family()) {
      case PotentialFamily::QuadraticMetric: return z / pot.weight();
      case PotentialFamily::PowerP: {
        const double q = pot.exponent() / (pot.exponent() - 1.0);
        return z == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(z), q - 1.0), z);
      }
      case PotentialFamily::Entropy: return std::exp(z);
      case PotentialFamily::Custom: break;
    }
    return pot.base_conjugate_grad(Eigen::VectorXd::Constant(1, z))[0];
  }
  double conj_hess(double z) const {
    switch (pot.family()) {
      case PotentialFamily::QuadraticMetric: return 1.0 / pot.weight();
      case PotentialFamily::PowerP: {
        const double q = pot.exponent() / (pot.exponent() - 1.0);
        return (q - 1.0) * std::pow(std::abs(z), q - 2.0);
      }
      case PotentialFamily::Entropy: return std::exp(z);
      case PotentialFamily::Custom: break;
    }
    const double d = 1e-6 * (1.0 + std::abs(z));
    return (conj_grad(z + d) - conj_grad(z - d)) / (2.0 * d);
  }
  /// rho psi0(nu / rho) with the lower-semicontinuous extension at rho = 0.
  double perspective(double rho, double nu) const {
    if (rho > 0.0) return rho * psi(nu / rho);
    return nu == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
};

}  // namespace dgflow
