#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dgflow {

struct LbfgsOptions {
  int max_iter = 5000;
  double gtol = 1e-6;
  int memory = 10;
  /// Largest increase of the objective an accepted step may cause.
  double increase_tol = 1e-12;
};

struct HistoryEntry {
  int iteration = 0;
  double value = 0.0;
  double grad_norm = 0.0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<HistoryEntry> history;
};

/// Objective returning f(x) and writing its gradient; +inf marks points
/// outside the domain (rejected by the line search).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with backtracking Armijo line search. When the
/// quasi-Newton direction admits no acceptable step, a steepest-descent step
/// is tried; if that fails too, StagnationError carries the best iterate.
LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts);

}  // namespace dgflow
