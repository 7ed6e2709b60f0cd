#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "dgflow/degiorgi.hpp"
#include "dgflow/hj_dual.hpp"
#include "dgflow/measure_relaxation.hpp"
#include "dgflow/trajectory_solver.hpp"

namespace dgflow {

enum class Stage { Solve, Mms, Relax, Dual };

const char* stage_name(Stage s);
/// "all" expands to every stage; throws SchemaError on unknown names.
std::vector<Stage> parse_stages(const std::string& text);

/// Window and resolution of the relaxed problem (n = 1).
struct GridSpec {
  int Nt = 64;
  int Nx = 64;
  double x_min = 0.0;
  double x_max = 0.0;
  bool gaussian_datum = false;
  double gap_tol = 1e-3;
  double time_limit_s = 50.0;
};

/// Pass thresholds of the stage assertions.
struct Tolerances {
  double value = 1e-3;
  double residual = 5e-3;
  /// Sup distance to the fine-grid flow oracle; negative disables the check.
  double oracle = -1.0;
  double solver_distance = 5e-2;
  double relax_value = 5e-2;
  double gap = 5e-2;
  double reconstruction = 5e-2;
  double reconstruction_excess = 0.1;
  double dual_upper = kDualTolerance;
  double dual_lower = -1e300;
  double feasibility = kFeasibilityTolerance;
  double friction_residual = 1e-2;
};

struct Scenario {
  std::string name;
  DeGiorgiParams params;
  GridSpec grid;
  DualFamilySpec dual_family;
  SampleSpec samples;
  SolverOptions solver;
  /// Start the direct solver from the minimizing-movements path.
  bool warm_start = false;
  Tolerances tol;
  unsigned long seed = 0;
  std::vector<Stage> stages;

  SpaceTimeGrid space_time_grid() const;
};

/// Builds a scenario from parsed JSON. Throws SchemaError naming the field.
Scenario scenario_from_json(const nlohmann::json& j);
/// Reads and parses a file. Syntax errors report the line and column.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace dgflow
