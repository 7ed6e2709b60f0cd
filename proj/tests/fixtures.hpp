#pragma once

#include <string>
#include <vector>

#include "dgflow/degiorgi.hpp"

namespace fx {

inline Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

inline dgflow::EnergyModel half_square() {
  return dgflow::EnergyModel::quadratic(1, Eigen::VectorXd::Zero(1), 1.0);
}

inline dgflow::DeGiorgiParams quadratic(int N = 200, double a = 0.0) {
  return {a, half_square(), dgflow::DissipationPotential::quadratic(1), v1(1.0), 1.0, N};
}

inline dgflow::DeGiorgiParams power(int N = 200) {
  return {0.0, half_square(), dgflow::DissipationPotential::power(1, 1.5), v1(1.0), 1.0, N};
}

inline dgflow::DeGiorgiParams double_well(double a = 1.0, int N = 400) {
  return {a, dgflow::EnergyModel::double_well(1, 1.0), dgflow::DissipationPotential::quadratic(1),
          v1(0.5), 4.0, N};
}

inline dgflow::DeGiorgiParams friction(int N = 400) {
  return {0.0, half_square(),
          dgflow::DissipationPotential::quadratic(1).with_friction(
              dgflow::FrictionField::parse(1, "1 + 0.5*sin(x)", 0.5, 1.5)),
          v1(1.0), 1.0, N};
}

inline dgflow::DeGiorgiParams time_dependent(int N = 200) {
  return {2.0, dgflow::EnergyModel::parse(1, "(1 + t)*x^2/2", dgflow::PowerBound{1.0, 0.0}),
          dgflow::DissipationPotential::quadratic(1), v1(1.0), 1.0, N};
}

inline dgflow::DeGiorgiParams stationary(int N = 200) {
  return {0.0, half_square(), dgflow::DissipationPotential::quadratic(1), v1(0.0), 1.0, N};
}

struct Named {
  std::string name;
  dgflow::DeGiorgiParams params;
};

/// The bundled problems at N = 200.
inline std::vector<Named> builtins() {
  return {{"quadratic", quadratic()},
          {"power", power()},
          {"double_well", double_well(1.0, 200)},
          {"double_well_a0", double_well(0.0, 200)},
          {"friction", friction(200)},
          {"time_dependent", time_dependent()},
          {"stationary", stationary()}};
}

}  // namespace fx
