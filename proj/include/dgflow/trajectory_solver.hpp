#pragma once

#include <utility>
#include <vector>

#include "dgflow/degiorgi.hpp"
#include "dgflow/lbfgs.hpp"

namespace dgflow {

struct SolverOptions {
  int max_iter = 20000;
  /// Gradient tolerance; a negative value means 1e-6 sqrt(n N).
  double gtol = -1.0;
  int memory = 10;
  /// Number of perturbed starts; 1 runs only the given init.
  int restarts = 1;
  /// Node noise of the restarts; a negative value means 0.1 |x0| + 0.1.
  double noise_sigma = -1.0;
  unsigned long seed = 0;
};

struct OptimResult {
  Trajectory trajectory;
  double value = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<HistoryEntry> history;
};

/// Direct transcription: minimizes the discrete J^a over the free nodes.
/// With opts.restarts > 1 the init is perturbed by Gaussian node noise and the
/// best run is kept (ties within 1e-9 go to the shortest path). Restarts run on
/// up to DGFLOW_THREADS threads.
OptimResult minimize_J(const DeGiorgiParams& params, const Trajectory& init,
                       const SolverOptions& opts = {});

/// Implicit Euler x_{k+1} = argmin tau psi(t_{k+1}, x_k, (x - x_k)/tau) + phi(t_{k+1}, x),
/// friction frozen at (t_{k+1}, x_k). Throws StepError when an inner solve fails.
Trajectory minimizing_movements(const DeGiorgiParams& params);

struct NullMinimumReport {
  double value = 0.0;
  /// Midpoint-rule error estimate; the continuum minimum is certified in
  /// [-eps_quad, eps_quad] around the discrete one.
  double eps_quad = 0.0;
  double max_residual = 0.0;
  bool converged = false;
  bool pass = false;
  /// (a', J^{a'}) for a' in {0, a, a + 1}; inadmissible weights are skipped.
  std::vector<std::pair<double, double>> weighted_values;
  double value_tol = 1e-3;
  double residual_tol = 5e-3;
};

NullMinimumReport verify_null_minimum(const DeGiorgiParams& params, const OptimResult& result,
                                      double value_tol = 1e-3, double residual_tol = 5e-3);

/// Worker count from DGFLOW_THREADS, capped by the hardware.
unsigned worker_threads();

}  // namespace dgflow
