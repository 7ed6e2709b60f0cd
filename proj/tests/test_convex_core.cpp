#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "dgflow/convex_core.hpp"
#include "dgflow/errors.hpp"
#include "generators.hpp"

using namespace dgflow;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }
DualVector z1(double x) { return DualVector(v1(x)); }
const Eigen::VectorXd kOrigin = Eigen::VectorXd::Zero(1);

std::vector<DissipationPotential> families(int dim) {
  return {DissipationPotential::quadratic(dim, 1.0), DissipationPotential::quadratic(dim, 2.5),
          DissipationPotential::power(dim, 1.5), DissipationPotential::power(dim, 3.0),
          DissipationPotential::entropy(dim)};
}

/// Random point of the effective domain.
Eigen::VectorXd domain_point(const DissipationPotential& pot, gen::Gen& g) {
  if (pot.family() == PotentialFamily::Entropy) return g.vector(pot.dim(), 0.05, 3.0);
  return g.vector(pot.dim(), -3.0, 3.0);
}

/// max_z <z, v> - psi*(z) for n = 1 by ternary search (the objective is concave).
double biconjugate(const DissipationPotential& pot, double v) {
  double lo = -60.0;
  double hi = 60.0;
  auto f = [&](double z) { return z * v - pot.conjugate(0.0, kOrigin, z1(z)); };
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) lo = m1; else hi = m2;
  }
  return f(0.5 * (lo + hi));
}

}  // namespace

TEST_SUITE("convex_core") {

TEST_CASE("evaluation examples") {
  CHECK(DissipationPotential::quadratic(1).eval(0.0, kOrigin, v1(0.0)) == 0.0);
  CHECK(std::isinf(DissipationPotential::entropy(1).eval(0.0, kOrigin, v1(-1.0))));
  // |v|^p / p at v = 2, p = 1.5
  CHECK(DissipationPotential::power(1, 1.5).eval(0.0, kOrigin, v1(2.0)) ==
        doctest::Approx(1.8856180831641267).epsilon(1e-14));
}

TEST_CASE("conjugate examples") {
  CHECK(DissipationPotential::entropy(1).conjugate(0.0, kOrigin, z1(1.0)) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(DissipationPotential::quadratic(1).conjugate(0.0, kOrigin, z1(0.0)) == 0.0);
  // brute-force maximization over [-1e3, 1e3]
  CHECK(DissipationPotential::power(1, 1.5).conjugate(0.0, kOrigin, z1(1.0)) ==
        doctest::Approx(0.33333333333333337).epsilon(1e-12));
}

TEST_CASE("subdifferential examples") {
  CHECK(DissipationPotential::quadratic(1, 2.0).subdifferential_select(0.0, kOrigin, v1(3.0)).components[0] ==
        doctest::Approx(6.0));
  CHECK(DissipationPotential::power(1, 2.0).subdifferential_select(0.0, kOrigin, v1(-1.0)).components[0] ==
        doctest::Approx(-1.0));
  CHECK(DissipationPotential::entropy(1).subdifferential_select(0.0, kOrigin, v1(1.0)).components[0] ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(DissipationPotential::entropy(1).subdifferential_select(0.0, kOrigin, v1(0.0)),
                  DomainError);
  CHECK_THROWS_AS(DissipationPotential::entropy(1).subdifferential_select(0.0, kOrigin, v1(-2.0)),
                  DomainError);
}

TEST_CASE("Fenchel gap examples") {
  const auto q = DissipationPotential::quadratic(1);
  CHECK(q.fenchel_gap(0.0, kOrigin, v1(1.0), z1(1.0)) == doctest::Approx(0.0));
  CHECK(q.fenchel_gap(0.0, kOrigin, v1(1.0), z1(0.0)) == doctest::Approx(0.5));
  CHECK(std::abs(DissipationPotential::power(1, 1.5).fenchel_gap(0.0, kOrigin, v1(2.0),
                                                                 z1(std::sqrt(2.0)))) < 1e-12);
}

TEST_CASE("dimension mismatch is an input error") {
  const auto q = DissipationPotential::quadratic(2);
  CHECK_THROWS_AS(q.eval(0.0, Eigen::VectorXd::Zero(2), v1(1.0)), InputError);
  CHECK_THROWS_AS(DissipationPotential::power(1, 1.0), InputError);
}

TEST_CASE("friction scales the potential and its conjugate") {
  const auto pot =
      DissipationPotential::quadratic(1).with_friction(FrictionField::parse(1, "1 + 0.5*sin(x)", 0.5, 1.5));
  const Eigen::VectorXd x = v1(0.7);
  const double a = 1.0 + 0.5 * std::sin(0.7);
  CHECK(pot.eval(0.3, x, v1(2.0)) == doctest::Approx(a * 2.0));
  CHECK(pot.conjugate(0.3, x, z1(2.0)) == doctest::Approx(4.0 / (2.0 * a)));
  CHECK(pot.fenchel_gap(0.3, x, v1(2.0), pot.subdifferential_select(0.3, x, v1(2.0))) < 1e-12);
}

TEST_CASE("custom potentials use the numeric conjugate") {
  const auto custom = DissipationPotential::parse(1, "v^2/2 + v^4/4");
  // maximizer of 2v - v^2/2 - v^4/4 solves v + v^3 = 2, i.e. v = 1
  CHECK(custom.conjugate(0.0, kOrigin, z1(2.0)) == doctest::Approx(2.0 - 0.75).epsilon(1e-8));
  const auto two_d = DissipationPotential::custom(
      2, [](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); });
  Eigen::VectorXd z(2);
  z << 1.0, -2.0;
  CHECK(two_d.conjugate(0.0, Eigen::VectorXd::Zero(2), DualVector(z)) == doctest::Approx(2.5).epsilon(1e-8));

  const auto linear = DissipationPotential::parse(1, "abs(v)");
  CHECK_THROWS_AS(linear.conjugate(0.0, kOrigin, z1(2.0)), UnboundedConjugateError);
}

TEST_CASE("kink selection takes the minimal-norm subgradient") {
  const auto kinked = DissipationPotential::parse(1, "v^2/2 + abs(v)");
  CHECK(kinked.subdifferential_select(0.0, kOrigin, v1(0.0)).components[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(kinked.subdifferential_select(0.0, kOrigin, v1(1.0)).components[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("property: Fenchel-Young inequality") {
  gen::Gen g(11);
  for (int dim : {1, 2}) {
    for (const auto& pot : families(dim)) {
      const Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < 500; ++i) {
        const Eigen::VectorXd v = domain_point(pot, g);
        const DualVector z(g.vector(dim, -4.0, 4.0));
        CHECK(pot.fenchel_gap(0.0, x, v, z) >= -1e-10);
      }
    }
  }
}

TEST_CASE("property: biconjugation recovers psi") {
  gen::Gen g(12);
  for (const auto& pot : families(1)) {
    for (int i = 0; i < 100; ++i) {
      const double v = domain_point(pot, g)[0];
      CHECK(biconjugate(pot, v) == doctest::Approx(pot.eval(0.0, kOrigin, v1(v))).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: convexity of psi and psi*") {
  gen::Gen g(13);
  for (int dim : {1, 2}) {
    for (const auto& pot : families(dim)) {
      const Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd u = domain_point(pot, g);
        const Eigen::VectorXd v = domain_point(pot, g);
        CHECK(pot.eval(0.0, x, 0.5 * (u + v)) <=
              0.5 * (pot.eval(0.0, x, u) + pot.eval(0.0, x, v)) + 1e-10);
        const Eigen::VectorXd a = g.vector(dim, -3.0, 3.0);
        const Eigen::VectorXd b = g.vector(dim, -3.0, 3.0);
        CHECK(pot.conjugate(0.0, x, DualVector(0.5 * (a + b))) <=
              0.5 * (pot.conjugate(0.0, x, DualVector(a)) + pot.conjugate(0.0, x, DualVector(b))) + 1e-10);
      }
    }
  }
}

TEST_CASE("property: selected subgradients close the gap") {
  gen::Gen g(14);
  for (int dim : {1, 2, 3}) {
    for (const auto& pot : families(dim)) {
      const Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd v = domain_point(pot, g);
        CHECK(pot.fenchel_gap(0.0, x, v, pot.subdifferential_select(0.0, x, v)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("property: shifting psi by k shifts psi* by -k") {
  gen::Gen g(15);
  for (const auto& pot : families(1)) {
    for (double k : {-1.0, 0.5, 3.0}) {
      const auto shifted = pot.shifted(k);
      for (int i = 0; i < 50; ++i) {
        const DualVector z(g.vector(1, -3.0, 3.0));
        CHECK(shifted.conjugate(0.0, kOrigin, z) == pot.conjugate(0.0, kOrigin, z) - k);
      }
    }
  }
}

TEST_CASE("property: superlinear growth") {
  gen::Gen g(16);
  for (int dim : {1, 2}) {
    for (const auto& pot : families(dim)) {
      const Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd u = domain_point(pot, g);
        u /= u.norm();
        double previous = -std::numeric_limits<double>::infinity();
        for (double R : {10.0, 100.0, 1000.0}) {
          const double ratio = pot.eval(0.0, x, R * u) / R;
          CHECK(ratio > previous);
          previous = ratio;
        }
        CHECK(previous > 5.0);
      }
    }
  }
}

}  // TEST_SUITE
