#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgflow/scenario.hpp"

namespace dgflow {

/// Fine-grid RK4 solution of x' = D psi0*(-D phi(t, x) / a(t, x)).
Trajectory flow_oracle(const DeGiorgiParams& params, int steps = 100000);

/// max_k |x_k - reference(t_k)| over the nodes of `traj`.
double sup_error(const Trajectory& traj, const Trajectory& reference);

/// Discrete L2 norm in time of a(t, x) D psi0(x') + D phi(t, x) at step midpoints.
double equation_residual_l2(const DeGiorgiParams& params, const Trajectory& traj);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  /// Overrides the scenario's stage list.
  std::optional<std::vector<Stage>> stages;
  std::optional<int> N;
  /// (Nt, Nx) of the relaxed problem.
  std::optional<std::pair<int, int>> grid;
  /// Write measured runtimes; when false every runtime is written as 0 so
  /// repeated runs produce identical files.
  bool record_timing = true;
  int oracle_steps = 100000;
};

struct StageOutcome {
  Stage stage = Stage::Solve;
  /// "pass", "fail" or "skipped".
  std::string status{};
  double value = 0.0;
  double residual = 0.0;
  /// NaN when the stage has no gap.
  double gap = 0.0;
  double runtime_s = 0.0;
  std::filesystem::path report{};
  std::vector<std::string> failures{};
};

struct RunResult {
  std::string scenario;
  std::filesystem::path dir;
  std::vector<StageOutcome> stages;

  bool passed() const;
};

/// Runs the requested stages in order into out_dir/<name>/ and writes
/// summary.csv (scenario, stage, status, value, residual, gap, runtime_s, report).
RunResult run_scenario(const Scenario& scenario, const RunOptions& opts = {});

struct RefinementRow {
  int N = 0;
  double value_direct = 0.0;
  double value_mms = 0.0;
  double distance = 0.0;
  double error_direct = 0.0;
  double error_mms = 0.0;
  double residual_direct = 0.0;
  double runtime_direct = 0.0;
  double runtime_mms = 0.0;
};

struct ComparisonReport {
  std::string scenario;
  int N = 0;
  /// Row at the scenario's N.
  RefinementRow at_N;
  /// N in {50, 100, 200, 400}.
  std::vector<RefinementRow> refinement;
  bool friction = false;
  bool passed = false;
  std::vector<std::string> failures;
  std::filesystem::path report;
};

/// Direct transcription against minimizing movements. Writes compare.json and
/// refinement.csv into out_dir/<name>/.
ComparisonReport compare_solvers(const Scenario& scenario, const RunOptions& opts = {});

}  // namespace dgflow
