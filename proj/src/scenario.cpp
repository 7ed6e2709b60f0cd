#include "dgflow/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include <nlohmann/json.hpp>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw SchemaError("field '" + field + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.contains(key)) fail(join(where, key), "unknown field");
}

const Json& require(const Json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(join(where, key), "missing");
  return obj.at(key);
}

double number(const Json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

int integer(const Json& v, const std::string& field, int min) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  const long long n = v.get<long long>();
  if (n < min || n > 100000000) fail(field, "must be at least " + std::to_string(min));
  return static_cast<int>(n);
}

std::string text(const Json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

double number_or(const Json& obj, const std::string& where, const char* key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(where, key)) : fallback;
}

int integer_or(const Json& obj, const std::string& where, const char* key, int fallback, int min) {
  return obj.contains(key) ? integer(obj.at(key), join(where, key), min) : fallback;
}

Eigen::VectorXd point(const Json& v, const std::string& field) {
  if (v.is_number()) return Eigen::VectorXd::Constant(1, v.get<double>());
  if (!v.is_array() || v.empty()) fail(field, "expected a number or a nonempty array");
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    x[static_cast<Eigen::Index>(i)] = number(v[i], field + "[" + std::to_string(i) + "]");
  return x;
}

EnergyModel energy_from(const Json& e, int dim, double T) {
  const std::string where = "energy";
  check_keys(e, where, {"family", "curvature", "center", "scale", "expr", "power_bound", "box"});
  const std::string family = text(require(e, where, "family"), "energy.family");
  if (family == "quadratic") {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
    if (e.contains("center")) center = point(e.at("center"), "energy.center");
    if (center.size() != dim) fail("energy.center", "dimension differs from x0");
    return EnergyModel::quadratic(dim, center, number_or(e, where, "curvature", 1.0));
  }
  if (family == "double_well") return EnergyModel::double_well(dim, number_or(e, where, "scale", 1.0));
  if (family == "custom") {
    std::optional<PowerBound> bound;
    if (e.contains("power_bound")) {
      const Json& pb = e.at("power_bound");
      check_keys(pb, "energy.power_bound", {"b", "c"});
      bound = PowerBound{number(require(pb, "energy.power_bound", "b"), "energy.power_bound.b"),
                         number_or(pb, "energy.power_bound", "c", 0.0)};
    }
    return EnergyModel::parse(dim, text(require(e, where, "expr"), "energy.expr"), bound, T,
                              number_or(e, where, "box", 4.0));
  }
  fail("energy.family", "unknown family '" + family + "'");
}

DissipationPotential potential_from(const Json& p, int dim) {
  const std::string where = "potential";
  check_keys(p, where, {"family", "weight", "p", "expr"});
  const std::string family = text(require(p, where, "family"), "potential.family");
  if (family == "quadratic") return DissipationPotential::quadratic(dim, number_or(p, where, "weight", 1.0));
  if (family == "power") return DissipationPotential::power(dim, number(require(p, where, "p"), "potential.p"));
  if (family == "entropy") return DissipationPotential::entropy(dim);
  if (family == "custom")
    return DissipationPotential::parse(dim, text(require(p, where, "expr"), "potential.expr"));
  fail("potential.family", "unknown family '" + family + "'");
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Solve: return "solve";
    case Stage::Mms: return "mms";
    case Stage::Relax: return "relax";
    case Stage::Dual: return "dual";
  }
  return "?";
}

std::vector<Stage> parse_stages(const std::string& text) {
  if (text == "all") return {Stage::Solve, Stage::Mms, Stage::Relax, Stage::Dual};
  for (Stage s : {Stage::Solve, Stage::Mms, Stage::Relax, Stage::Dual})
    if (text == stage_name(s)) return {s};
  throw SchemaError("unknown stage '" + text + "'");
}

SpaceTimeGrid Scenario::space_time_grid() const {
  return SpaceTimeGrid(params.T, grid.Nt, grid.x_min, grid.x_max, grid.Nx);
}

Scenario scenario_from_json(const Json& j) {
  check_keys(j, "", {"name", "energy", "potential", "friction", "a", "x0", "T", "N", "grid", "dual",
                     "solver", "tolerances", "seed", "stages"});
  const std::string name = text(require(j, "", "name"), "name");
  if (name.empty() || name.find_first_of("/\\") != std::string::npos)
    fail("name", "must be a nonempty plain file name");
  const Eigen::VectorXd x0 = point(require(j, "", "x0"), "x0");
  const int dim = static_cast<int>(x0.size());
  const double T = number(require(j, "", "T"), "T");
  if (!(T > 0.0)) fail("T", "must be positive");
  const int N = integer(require(j, "", "N"), "N", 2);
  const double a = number_or(j, "", "a", 0.0);

  std::optional<EnergyModel> energy;
  std::optional<DissipationPotential> pot;
  try {
    energy = energy_from(require(j, "", "energy"), dim, T);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    fail("energy", e.what());
  }
  try {
    pot = potential_from(require(j, "", "potential"), dim);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    fail("potential", e.what());
  }

  SampleSpec samples;
  if (j.contains("friction")) {
    const Json& f = j.at("friction");
    check_keys(f, "friction", {"expr", "lower", "upper"});
    try {
      FrictionField field = FrictionField::parse(
          dim, text(require(f, "friction", "expr"), "friction.expr"),
          number(require(f, "friction", "lower"), "friction.lower"),
          number(require(f, "friction", "upper"), "friction.upper"));
      const Eigen::VectorXd r = Eigen::VectorXd::Constant(dim, samples.radius);
      field.check_bounds(T, x0 - r, x0 + r);
      pot = pot->with_friction(std::move(field));
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      fail("friction", e.what());
    }
  }

  std::optional<DeGiorgiParams> params;
  try {
    params.emplace(a, *energy, *pot, x0, T, N);
  } catch (const Error& e) {
    fail("a", e.what());
  }

  GridSpec grid;
  grid.x_min = x0[0] - 1.5;
  grid.x_max = x0[0] + 1.5;
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    check_keys(g, "grid", {"Nt", "Nx", "x_min", "x_max", "gaussian_datum", "gap_tol", "time_limit_s"});
    grid.Nt = integer_or(g, "grid", "Nt", grid.Nt, 2);
    grid.Nx = integer_or(g, "grid", "Nx", grid.Nx, 3);
    grid.x_min = number_or(g, "grid", "x_min", grid.x_min);
    grid.x_max = number_or(g, "grid", "x_max", grid.x_max);
    if (!(grid.x_max > grid.x_min)) fail("grid.x_max", "must exceed grid.x_min");
    if (g.contains("gaussian_datum")) {
      if (!g.at("gaussian_datum").is_boolean()) fail("grid.gaussian_datum", "expected a boolean");
      grid.gaussian_datum = g.at("gaussian_datum").get<bool>();
    }
    grid.gap_tol = number_or(g, "grid", "gap_tol", grid.gap_tol);
    grid.time_limit_s = number_or(g, "grid", "time_limit_s", grid.time_limit_s);
  }

  DualFamilySpec family;
  if (j.contains("dual")) {
    const Json& d = j.at("dual");
    check_keys(d, "dual", {"knots", "degree", "radius", "grid_t", "grid_x", "quasi_random"});
    family.knots = integer_or(d, "dual", "knots", family.knots, 2);
    family.degree = integer_or(d, "dual", "degree", family.degree, 1);
    samples.radius = number_or(d, "dual", "radius", samples.radius);
    samples.grid_t = integer_or(d, "dual", "grid_t", samples.grid_t, 2);
    samples.grid_x = integer_or(d, "dual", "grid_x", samples.grid_x, 2);
    samples.quasi_random = integer_or(d, "dual", "quasi_random", samples.quasi_random, 0);
    if (2 * family.knots * (family.degree + 1) > family.max_params)
      fail("dual", "more than " + std::to_string(family.max_params) + " parameters");
  }

  SolverOptions solver;
  bool warm_start = false;
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    check_keys(s, "solver", {"restarts", "noise_sigma", "max_iter", "warm_start"});
    solver.restarts = integer_or(s, "solver", "restarts", solver.restarts, 1);
    solver.noise_sigma = number_or(s, "solver", "noise_sigma", solver.noise_sigma);
    solver.max_iter = integer_or(s, "solver", "max_iter", solver.max_iter, 1);
    if (s.contains("warm_start")) {
      if (!s.at("warm_start").is_boolean()) fail("solver.warm_start", "expected a boolean");
      warm_start = s.at("warm_start").get<bool>();
    }
  }

  Tolerances tol;
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    check_keys(t, "tolerances",
               {"value", "residual", "oracle", "solver_distance", "relax_value", "gap",
                "reconstruction", "reconstruction_excess", "dual_upper", "dual_lower",
                "feasibility", "friction_residual"});
    const std::string w = "tolerances";
    tol.value = number_or(t, w, "value", tol.value);
    tol.residual = number_or(t, w, "residual", tol.residual);
    tol.oracle = number_or(t, w, "oracle", tol.oracle);
    tol.solver_distance = number_or(t, w, "solver_distance", tol.solver_distance);
    tol.relax_value = number_or(t, w, "relax_value", tol.relax_value);
    tol.gap = number_or(t, w, "gap", tol.gap);
    tol.reconstruction = number_or(t, w, "reconstruction", tol.reconstruction);
    tol.reconstruction_excess = number_or(t, w, "reconstruction_excess", tol.reconstruction_excess);
    tol.dual_upper = number_or(t, w, "dual_upper", tol.dual_upper);
    tol.dual_lower = number_or(t, w, "dual_lower", tol.dual_lower);
    tol.feasibility = number_or(t, w, "feasibility", tol.feasibility);
    tol.friction_residual = number_or(t, w, "friction_residual", tol.friction_residual);
  }

  unsigned long seed = 0;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    seed = j.at("seed").get<unsigned long>();
  }
  solver.seed = seed;

  std::vector<Stage> stages = parse_stages("all");
  if (j.contains("stages")) {
    const Json& s = j.at("stages");
    if (!s.is_array() || s.empty()) fail("stages", "expected a nonempty array of stage names");
    stages.clear();
    for (const Json& v : s) {
      try {
        for (Stage st : parse_stages(text(v, "stages"))) stages.push_back(st);
      } catch (const SchemaError& e) {
        fail("stages", e.what());
      }
    }
  }

  return Scenario{name, std::move(*params), grid, family, samples, solver, warm_start, tol, seed,
                  std::move(stages)};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace dgflow
