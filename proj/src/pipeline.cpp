#include "dgflow/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "dgflow/errors.hpp"

namespace dgflow {

namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(num(v));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> trajectory_header(int dim) {
  std::vector<std::string> h{"t"};
  for (int i = 1; i <= dim; ++i) h.push_back("x_" + std::to_string(i));
  return h;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  Csv csv(path, trajectory_header(traj.dim()));
  for (int k = 0; k <= traj.N(); ++k) {
    std::vector<double> r{traj.time(k)};
    for (int i = 0; i < traj.dim(); ++i) r.push_back(traj.nodes()(k, i));
    csv.row(r);
  }
}

void write_history(const std::filesystem::path& path, const std::vector<HistoryEntry>& history) {
  Csv csv(path, {"iteration", "value", "grad_norm"});
  for (const HistoryEntry& h : history) csv.row({double(h.iteration), h.value, h.grad_norm});
}

Json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Trajectory initial_guess(const Scenario& sc, const DeGiorgiParams& params) {
  if (sc.warm_start) return minimizing_movements(params);
  return Trajectory::constant(params.x0, params.T, params.N);
}

/// State shared between the stages of one run.
struct Context {
  const Scenario& sc;
  const RunOptions& opts;
  DeGiorgiParams params;
  std::filesystem::path dir;
  std::optional<Trajectory> oracle{};
  std::optional<OptimResult> direct{};
  double eps_quad = 0.0;
  std::optional<double> relaxed_value{};

  const Trajectory& flow() {
    if (!oracle) oracle = flow_oracle(params, opts.oracle_steps);
    return *oracle;
  }
  double runtime(Clock::time_point start) const {
    return opts.record_timing ? seconds_since(start) : 0.0;
  }
};

void check(StageOutcome& out, bool ok, const std::string& what) {
  if (!ok) out.failures.push_back(what);
}

StageOutcome run_solve(Context& cx) {
  StageOutcome out{Stage::Solve};
  const Scenario& sc = cx.sc;
  const Tolerances& tol = sc.tol;
  const auto start = Clock::now();
  OptimResult res = minimize_J(cx.params, initial_guess(sc, cx.params), sc.solver);
  const double runtime = cx.runtime(start);
  const NullMinimumReport rep = verify_null_minimum(cx.params, res, tol.value, tol.residual);

  const double oracle_error = sup_error(res.trajectory, cx.flow());
  const bool friction = cx.params.pot.friction().has_value();
  const double eq_residual = equation_residual_l2(cx.params, res.trajectory);
  std::string power_bound = "not applicable";
  if (cx.params.energy.time_dependent()) {
    try {
      check_power_bound_on_nodes(cx.params, res.trajectory);
      power_bound = "holds";
    } catch (const PowerBoundViolation& e) {
      power_bound = e.what();
    }
  }

  check(out, std::abs(rep.value) <= tol.value, "|J| above tolerances.value");
  check(out, rep.max_residual <= tol.residual, "Fenchel residual above tolerances.residual");
  for (const auto& [a, v] : rep.weighted_values)
    check(out, std::abs(v) <= tol.value, "J at a' = " + num(a) + " above tolerances.value");
  if (tol.oracle >= 0.0) check(out, oracle_error <= tol.oracle, "oracle error above tolerances.oracle");
  if (friction)
    check(out, eq_residual <= tol.friction_residual,
          "equation residual above tolerances.friction_residual");
  if (cx.params.energy.time_dependent()) check(out, power_bound == "holds", "power bound: " + power_bound);

  write_trajectory(cx.dir / "trajectory_solve.csv", res.trajectory);
  write_history(cx.dir / "history_solve.csv", res.history);
  {
    Csv csv(cx.dir / "residual_solve.csv", {"k", "t_mid", "residual"});
    const auto r = residual_profile(cx.params, res.trajectory);
    for (std::size_t k = 0; k < r.size(); ++k)
      csv.row({double(k), (double(k) + 0.5) * cx.params.tau(), r[k]});
  }
  {
    const Trajectory& o = cx.flow();
    Csv csv(cx.dir / "oracle.csv", trajectory_header(o.dim()));
    for (int k = 0; k <= cx.params.N; ++k) {
      const double t = cx.params.T * k / cx.params.N;
      std::vector<double> r{t};
      const Eigen::VectorXd x = o.at(t);
      for (Eigen::Index i = 0; i < x.size(); ++i) r.push_back(x[i]);
      csv.row(r);
    }
  }

  Json weighted = Json::array();
  for (const auto& [a, v] : rep.weighted_values) weighted.push_back({{"a", a}, {"value", v}});
  out.report = cx.dir / "report_solve.json";
  write_json(out.report, {{"stage", "solve"},
                          {"value", rep.value},
                          {"certified_interval", {-rep.eps_quad, rep.eps_quad}},
                          {"per_step_residual_max", rep.max_residual},
                          {"quadrature_N", cx.params.N},
                          {"converged", res.converged},
                          {"iterations", res.iterations},
                          {"grad_norm", res.grad_norm},
                          {"weighted_values", weighted},
                          {"oracle_error", oracle_error},
                          {"equation_residual_l2", eq_residual},
                          {"power_bound", power_bound},
                          {"terminal", vec(res.trajectory.node(res.trajectory.N()))},
                          {"runtime_s", runtime},
                          {"failures", out.failures}});

  out.value = rep.value;
  out.residual = rep.max_residual;
  out.gap = kNaN;
  out.runtime_s = runtime;
  cx.eps_quad = rep.eps_quad;
  cx.direct = std::move(res);
  return out;
}

StageOutcome run_mms(Context& cx) {
  StageOutcome out{Stage::Mms};
  const auto start = Clock::now();
  const Trajectory traj = minimizing_movements(cx.params);
  const double runtime = cx.runtime(start);
  const double value = evaluate_J(cx.params, traj);
  double max_residual = 0.0;
  for (double r : residual_profile(cx.params, traj)) max_residual = std::max(max_residual, r);
  const double oracle_error = sup_error(traj, cx.flow());
  double distance = kNaN;
  if (cx.direct) {
    distance = traj.sup_distance(cx.direct->trajectory);
    check(out, distance <= cx.sc.tol.solver_distance,
          "distance to the direct solution above tolerances.solver_distance");
  }

  write_trajectory(cx.dir / "trajectory_mms.csv", traj);
  out.report = cx.dir / "report_mms.json";
  write_json(out.report, {{"stage", "mms"},
                          {"value", value},
                          {"per_step_residual_max", max_residual},
                          {"distance_to_direct", std::isnan(distance) ? Json() : Json(distance)},
                          {"oracle_error", oracle_error},
                          {"runtime_s", runtime},
                          {"failures", out.failures}});
  out.value = value;
  out.residual = max_residual;
  out.gap = distance;
  out.runtime_s = runtime;
  return out;
}

StageOutcome run_relax(Context& cx) {
  StageOutcome out{Stage::Relax};
  const Scenario& sc = cx.sc;
  const Tolerances& tol = sc.tol;
  if (cx.params.x0.size() != 1) {
    out.status = "skipped";
    out.failures.push_back("relaxed solver is one-dimensional");
    return out;
  }
  GridSpec gs = sc.grid;
  if (cx.opts.grid) std::tie(gs.Nt, gs.Nx) = *cx.opts.grid;
  const SpaceTimeGrid grid(cx.params.T, gs.Nt, gs.x_min, gs.x_max, gs.Nx);
  RelaxOptions ro;
  ro.gap_tol = gs.gap_tol;
  ro.time_limit_s = gs.time_limit_s;
  ro.gaussian_datum = gs.gaussian_datum;

  const auto start = Clock::now();
  const RelaxResult res = solve_relaxed(cx.params, grid, ro);
  const double runtime = cx.runtime(start);
  const double reference = cx.direct ? cx.direct->value : 0.0;
  const double ce_residual = ContinuityOperator(grid).scaled_residual(res.triple);

  Json recon_json;
  double recon_error = kNaN;
  double recon_value = kNaN;
  try {
    const Trajectory recon = reconstruct_characteristic(grid, res.triple, cx.params.x0[0]);
    recon_error = sup_error(recon, cx.flow());
    recon_value = evaluate_J(cx.params.with_N(recon.N()), recon);
    write_trajectory(cx.dir / "trajectory_relax.csv", recon);
    recon_json = {{"sup_error", recon_error},
                  {"J", recon_value},
                  {"terminal", recon.node(recon.N())[0]}};
  } catch (const ReconstructionDegenerateError& e) {
    recon_json = {{"error", e.what()}, {"partial_path", e.partial_path()}};
    out.failures.push_back(std::string("reconstruction: ") + e.what());
  }

  check(out, res.duality_gap <= tol.gap, "duality gap above tolerances.gap");
  check(out, std::abs(res.value - reference) <= tol.relax_value,
        "relaxed value differs from min J by more than tolerances.relax_value");
  if (!std::isnan(recon_error)) {
    check(out, recon_error <= tol.reconstruction,
          "reconstruction error above tolerances.reconstruction");
    check(out, recon_value <= res.value + tol.reconstruction_excess,
          "J(reconstruction) exceeds the relaxed value by more than tolerances.reconstruction_excess");
  }

  {
    Csv csv(cx.dir / "relax_mu.csv", {"t_mid", "x", "mu"});
    for (int k = 0; k < grid.Nt; ++k)
      for (int i = 0; i < grid.Nx; ++i)
        csv.row({(k + 0.5) * grid.tau(), grid.center(i), res.triple.mu(k, i)});
  }
  {
    Csv csv(cx.dir / "relax_history.csv", {"iteration", "value", "gap"});
    for (const RelaxHistoryEntry& h : res.history) csv.row({double(h.iteration), h.value, h.gap});
  }
  out.report = cx.dir / "report_relax.json";
  write_json(out.report, {{"stage", "relax"},
                          {"grid", {{"Nt", gs.Nt}, {"Nx", gs.Nx}, {"x_min", gs.x_min}, {"x_max", gs.x_max}}},
                          {"value", res.value},
                          {"dual_value", res.dual_value},
                          {"duality_gap", res.duality_gap},
                          {"reference_J", reference},
                          {"continuity_residual", ce_residual},
                          {"iterations", res.iterations},
                          {"converged", res.converged},
                          {"operator_norm", res.operator_norm},
                          {"reconstruction", recon_json},
                          {"runtime_s", runtime},
                          {"failures", out.failures}});
  out.value = res.value;
  out.residual = ce_residual;
  out.gap = res.duality_gap;
  out.runtime_s = runtime;
  cx.relaxed_value = res.value;
  return out;
}

StageOutcome run_dual(Context& cx) {
  StageOutcome out{Stage::Dual};
  const Scenario& sc = cx.sc;
  const Tolerances& tol = sc.tol;
  if (cx.params.x0.size() != 1 || !cx.params.pot.has_closed_form_conjugate()) {
    out.status = "skipped";
    out.failures.push_back("dual ascent needs n = 1 and a closed-form conjugate");
    return out;
  }
  DualOptions dopts;
  dopts.samples = sc.samples;
  dopts.tol_feas = tol.feasibility;
  dopts.tol_dual = tol.dual_upper;

  const auto start = Clock::now();
  const DualResult res = maximize_dual(cx.params, sc.dual_family, dopts);
  const double runtime = cx.runtime(start);

  // every certificate that passes the feasibility check must satisfy the backward bound
  struct Candidate {
    const char* name;
    CylinderSubsolution xi;
  };
  const std::vector<Candidate> candidates{
      {"ascent", res.certificate},
      {"canonical", CylinderSubsolution::canonical(cx.params)},
      {"zero", CylinderSubsolution::constant(1, 0.0)},
      {"canonical_minus_0.1", CylinderSubsolution::canonical(cx.params).plus(-0.1)}};
  Json checked = Json::array();
  int counterexamples = 0;
  double canonical_violation = kNaN;
  for (const Candidate& c : candidates) {
    const FeasibilityReport fr = check_hj_feasible(cx.params, c.xi, sc.samples, tol.feasibility);
    const BackwardBoundReport bb = check_backward_bound(cx.params, c.xi, sc.samples);
    if (std::string(c.name) == "canonical")
      canonical_violation = std::max(fr.max_violation_hj, fr.max_violation_terminal);
    if (!bb.vacuous && !bb.holds) ++counterexamples;
    checked.push_back({{"certificate", c.name},
                       {"feasible", fr.feasible},
                       {"max_excess", bb.max_excess},
                       {"vacuous", bb.vacuous},
                       {"holds", bb.holds}});
  }

  check(out, !res.falsified, "dual value above tolerances.dual_upper (falsification event)");
  check(out, res.value >= tol.dual_lower, "dual value below tolerances.dual_lower");
  check(out, counterexamples == 0, "backward bound counterexample");
  check(out, canonical_violation <= 1e-8, "canonical certificate violates the constraints");
  double sandwich = kNaN;
  if (cx.direct) {
    sandwich = cx.direct->value - res.value;
    check(out, res.value <= cx.direct->value + std::max(cx.eps_quad, tol.feasibility),
          "weak duality fails against the direct solution");
  }
  if (cx.relaxed_value)
    check(out, res.value <= *cx.relaxed_value + tol.gap, "weak duality fails against the relaxed value");

  write_json(cx.dir / "certificate.json",
             to_json(res.certificate, res.feasibility,
                     res.certificate.bounds(sc.samples.points(cx.params.T, cx.params.x0))));
  {
    Csv csv(cx.dir / "dual_profile.csv", {"t", "x", "xi", "weighted_energy"});
    const int nt = 41;
    const int nx = 61;
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nx; ++j) {
        const double t = cx.params.T * i / (nt - 1);
        Eigen::VectorXd x = cx.params.x0;
        x[0] += sc.samples.radius * (2.0 * j / (nx - 1) - 1.0);
        csv.row({t, x[0], res.certificate.value(t, x),
                 std::exp(-cx.params.a * t) * cx.params.energy.eval(t, x)});
      }
  }
  const double violation =
      std::max(res.feasibility.max_violation_hj, res.feasibility.max_violation_terminal);
  out.report = cx.dir / "report_dual.json";
  write_json(out.report, {{"stage", "dual"},
                          {"value", res.value},
                          {"restoration_eps", res.restoration_eps},
                          {"falsified", res.falsified},
                          {"iterations", res.iterations},
                          {"feasibility", to_json(res.feasibility)},
                          {"canonical_max_violation", canonical_violation},
                          {"backward_bound", checked},
                          {"counterexamples", counterexamples},
                          {"primal_dual_width", std::isnan(sandwich) ? Json() : Json(sandwich)},
                          {"runtime_s", runtime},
                          {"failures", out.failures}});
  out.value = res.value;
  out.residual = violation;
  out.gap = sandwich;
  out.runtime_s = runtime;
  return out;
}

}  // namespace

Trajectory flow_oracle(const DeGiorgiParams& params, int steps) {
  if (steps < 1) throw InputError("flow_oracle: steps must be positive");
  const auto& pot = params.pot;
  const auto& energy = params.energy;
  auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double a = pot.friction_at(t, x);
    return pot.base_conjugate_grad(-energy.grad(t, x).components / a);
  };
  const double h = params.T / steps;
  Eigen::MatrixXd nodes(steps + 1, params.x0.size());
  Eigen::VectorXd x = params.x0;
  nodes.row(0) = x.transpose();
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    nodes.row(k + 1) = x.transpose();
  }
  return Trajectory(params.T, std::move(nodes));
}

double sup_error(const Trajectory& traj, const Trajectory& reference) {
  double d = 0.0;
  for (int k = 0; k <= traj.N(); ++k)
    d = std::max(d, (traj.node(k) - reference.at(traj.time(k))).norm());
  return d;
}

double equation_residual_l2(const DeGiorgiParams& params, const Trajectory& traj) {
  const double tau = traj.tau();
  double sum = 0.0;
  for (int k = 0; k < traj.N(); ++k) {
    const double t = (k + 0.5) * tau;
    const Eigen::VectorXd mid = 0.5 * (traj.node(k) + traj.node(k + 1));
    const Eigen::VectorXd v = (traj.node(k + 1) - traj.node(k)) / tau;
    const Eigen::VectorXd r =
        params.pot.subdifferential_select(t, mid, v).components + params.energy.grad(t, mid).components;
    sum += tau * r.squaredNorm();
  }
  return std::sqrt(sum);
}

bool RunResult::passed() const {
  for (const StageOutcome& s : stages)
    if (s.status == "fail") return false;
  return true;
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& opts) {
  Context cx{scenario, opts, opts.N ? scenario.params.with_N(*opts.N) : scenario.params,
             opts.out_dir / scenario.name};
  std::filesystem::create_directories(cx.dir);
  RunResult result{scenario.name, cx.dir, {}};
  const std::vector<Stage> stages = opts.stages ? *opts.stages : scenario.stages;
  for (Stage st : stages) {
    StageOutcome out;
    try {
      switch (st) {
        case Stage::Solve: out = run_solve(cx); break;
        case Stage::Mms: out = run_mms(cx); break;
        case Stage::Relax: out = run_relax(cx); break;
        case Stage::Dual: out = run_dual(cx); break;
      }
    } catch (const Error& e) {
      out = StageOutcome{st};
      out.value = out.residual = out.gap = kNaN;
      out.failures.push_back(e.what());
      out.report = cx.dir / (std::string("report_") + stage_name(st) + ".json");
      write_json(out.report, {{"stage", stage_name(st)}, {"error", e.what()}});
    }
    if (out.status.empty()) out.status = out.failures.empty() ? "pass" : "fail";
    if (out.status == "skipped") out.value = out.residual = out.gap = kNaN;
    result.stages.push_back(std::move(out));
  }

  Csv csv(cx.dir / "summary.csv",
          {"scenario", "stage", "status", "value", "residual", "gap", "runtime_s", "report"});
  for (const StageOutcome& s : result.stages)
    csv.row_strings({scenario.name, stage_name(s.stage), s.status, num(s.value), num(s.residual),
                     num(s.gap), num(s.runtime_s), s.report.filename().string()});
  return result;
}

ComparisonReport compare_solvers(const Scenario& scenario, const RunOptions& opts) {
  const DeGiorgiParams base = opts.N ? scenario.params.with_N(*opts.N) : scenario.params;
  const std::filesystem::path dir = opts.out_dir / scenario.name;
  std::filesystem::create_directories(dir);
  const Trajectory oracle = flow_oracle(base, opts.oracle_steps);

  auto row_at = [&](int N) {
    const DeGiorgiParams p = base.with_N(N);
    RefinementRow r;
    r.N = N;
    auto start = Clock::now();
    const OptimResult direct = minimize_J(p, initial_guess(scenario, p), scenario.solver);
    r.runtime_direct = opts.record_timing ? seconds_since(start) : 0.0;
    start = Clock::now();
    const Trajectory mms = minimizing_movements(p);
    r.runtime_mms = opts.record_timing ? seconds_since(start) : 0.0;
    r.value_direct = direct.value;
    r.value_mms = evaluate_J(p, mms);
    r.distance = direct.trajectory.sup_distance(mms);
    r.error_direct = sup_error(direct.trajectory, oracle);
    r.error_mms = sup_error(mms, oracle);
    r.residual_direct = equation_residual_l2(p, direct.trajectory);
    return r;
  };

  ComparisonReport rep;
  rep.scenario = scenario.name;
  rep.N = base.N;
  rep.friction = base.pot.friction().has_value();
  std::set<int> levels{50, 100, 200, 400};
  for (int N : levels) rep.refinement.push_back(row_at(N));
  rep.at_N = levels.contains(base.N) ? rep.refinement[static_cast<std::size_t>(
                                           std::distance(levels.begin(), levels.find(base.N)))]
                                     : row_at(base.N);

  if (rep.at_N.distance > scenario.tol.solver_distance)
    rep.failures.push_back("sup distance above tolerances.solver_distance");
  if (rep.friction && rep.refinement.back().residual_direct > scenario.tol.friction_residual)
    rep.failures.push_back("equation residual at N = 400 above tolerances.friction_residual");
  rep.passed = rep.failures.empty();

  Csv csv(dir / "refinement.csv", {"N", "J_direct", "J_mms", "sup_distance", "error_direct",
                                   "error_mms", "residual_l2_direct", "runtime_direct_s",
                                   "runtime_mms_s"});
  Json rows = Json::array();
  auto row_json = [](const RefinementRow& r) {
    return Json{{"N", r.N},
                {"J_direct", r.value_direct},
                {"J_mms", r.value_mms},
                {"sup_distance", r.distance},
                {"error_direct", r.error_direct},
                {"error_mms", r.error_mms},
                {"residual_l2_direct", r.residual_direct},
                {"runtime_direct_s", r.runtime_direct},
                {"runtime_mms_s", r.runtime_mms}};
  };
  for (const RefinementRow& r : rep.refinement) {
    csv.row({double(r.N), r.value_direct, r.value_mms, r.distance, r.error_direct, r.error_mms,
             r.residual_direct, r.runtime_direct, r.runtime_mms});
    rows.push_back(row_json(r));
  }
  rep.report = dir / "compare.json";
  write_json(rep.report, {{"scenario", scenario.name},
                          {"N", rep.N},
                          {"at_N", row_json(rep.at_N)},
                          {"refinement", rows},
                          {"friction", rep.friction},
                          {"passed", rep.passed},
                          {"failures", rep.failures}});
  return rep;
}

}  // namespace dgflow
