#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dgflow {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, bad parameter, unknown family.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the effective domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numeric conjugate whose supremum is not attained inside the search ball.
class UnboundedConjugateError : public Error {
 public:
  using Error::Error;
};

/// Time-dependent energy violating |d_t phi| <= b (phi + c (1 + |x|)).
class PowerBoundViolation : public Error {
 public:
  using Error::Error;
};

/// Every line search failed; carries the best iterate found so far.
class StagnationError : public Error {
 public:
  StagnationError(const std::string& what, Eigen::VectorXd best, double best_value)
      : Error(what), best_(std::move(best)), best_value_(best_value) {}

  const Eigen::VectorXd& best() const { return best_; }
  double best_value() const { return best_value_; }

 private:
  Eigen::VectorXd best_;
  double best_value_;
};

/// Inner solve of a minimizing-movements step failed.
class StepError : public Error {
 public:
  StepError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Trajectory leaves the spatial window of a space-time grid.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// Characteristic reconstruction hit vacuum; carries the partial path.
class ReconstructionDegenerateError : public Error {
 public:
  ReconstructionDegenerateError(const std::string& what, std::vector<double> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<double>& partial_path() const { return partial_; }

 private:
  std::vector<double> partial_;
};

/// Parametric dual family without any sampled-feasible member.
class InfeasibleFamilyError : public Error {
 public:
  using Error::Error;
};

/// Scenario file does not conform to the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgflow
