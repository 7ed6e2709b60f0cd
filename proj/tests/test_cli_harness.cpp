#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "dgflow/errors.hpp"
#include "dgflow/pipeline.hpp"
#include "dgflow/scenario.hpp"

using namespace dgflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScenarios = DGFLOW_SCENARIOS;

/// Fresh scratch directory removed on scope exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("dgflow_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

json base_scenario() {
  return json::parse(slurp(kScenarios / "quadratic.json"));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DGFLOW_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli_harness") {

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"quadratic", "power", "double_well", "double_well_a0", "friction", "time_dependent",
                           "stationary"}) {
    CAPTURE(name);
    const Scenario sc = load_scenario(kScenarios / (std::string(name) + ".json"));
    CHECK(sc.name == name);
    CHECK(sc.stages.size() == 4);
  }
}

TEST_CASE("schema errors name the field") {
  json missing = base_scenario();
  missing.erase("T");
  CHECK_THROWS_WITH_AS(scenario_from_json(missing), doctest::Contains("'T'"), SchemaError);

  json unknown = base_scenario();
  unknown["colour"] = "blue";
  CHECK_THROWS_WITH_AS(scenario_from_json(unknown), doctest::Contains("colour"), SchemaError);

  json bad_family = base_scenario();
  bad_family["potential"]["family"] = "cubic";
  CHECK_THROWS_AS(scenario_from_json(bad_family), SchemaError);

  json bad_N = base_scenario();
  bad_N["N"] = 0;
  CHECK_THROWS_AS(scenario_from_json(bad_N), SchemaError);

  CHECK_THROWS_AS(parse_stages("warp"), SchemaError);
  CHECK(parse_stages("all").size() == 4);

  ScratchDir dir("schema");
  const fs::path broken = dir.path() / "broken.json";
  std::ofstream(broken) << "{\n  \"name\": \"x\",\n  \"T\": 1.0,,\n}\n";
  CHECK_THROWS_WITH_AS(load_scenario(broken), doctest::Contains("line 3"), SchemaError);
  CHECK_THROWS_AS(load_scenario(dir.path() / "absent.json"), SchemaError);
}

TEST_CASE("quadratic run passes and the summary matches the reports") {
  ScratchDir dir("quadratic");
  RunOptions opts;
  opts.out_dir = dir.path();
  const RunResult res = run_scenario(load_scenario(kScenarios / "quadratic.json"), opts);
  CHECK(res.passed());
  for (const auto& s : res.stages) {
    CAPTURE(stage_name(s.stage));
    CHECK(s.status == "pass");
    for (const auto& f : s.failures) MESSAGE(f);
  }
  const auto rows = read_csv(res.dir / "summary.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"scenario", "stage", "status", "value", "residual", "gap",
                                            "runtime_s", "report"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    REQUIRE(row.size() == 8);
    const json report = json::parse(slurp(res.dir / row[7]));
    CHECK(std::stod(row[3]) == report.at("value").get<double>());
  }
  for (const char* f : {"trajectory_solve.csv", "history_solve.csv", "residual_solve.csv", "oracle.csv",
                        "trajectory_mms.csv", "relax_mu.csv", "trajectory_relax.csv", "certificate.json",
                        "dual_profile.csv"})
    CHECK(fs::exists(res.dir / f));
}

TEST_CASE("stationary run stays at zero") {
  ScratchDir dir("stationary");
  RunOptions opts;
  opts.out_dir = dir.path();
  const RunResult res = run_scenario(load_scenario(kScenarios / "stationary.json"), opts);
  CHECK(res.passed());
  for (const auto& s : res.stages) {
    CAPTURE(stage_name(s.stage));
    CHECK(std::abs(s.value) <= 1e-6);
  }
}

TEST_CASE("runs without timing are byte-identical") {
  ScratchDir first("det_a");
  ScratchDir second("det_b");
  const Scenario sc = load_scenario(kScenarios / "quadratic.json");
  RunOptions opts;
  opts.record_timing = false;
  opts.stages = std::vector<Stage>{Stage::Solve, Stage::Mms, Stage::Relax};
  opts.out_dir = first.path();
  const RunResult a = run_scenario(sc, opts);
  opts.out_dir = second.path();
  const RunResult b = run_scenario(sc, opts);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a.dir)) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b.dir / entry.path().filename()));
    ++compared;
  }
  CHECK(compared >= 8);
}

TEST_CASE("compare on the stationary scenario") {
  ScratchDir dir("compare");
  RunOptions opts;
  opts.out_dir = dir.path();
  const ComparisonReport rep = compare_solvers(load_scenario(kScenarios / "stationary.json"), opts);
  CHECK(rep.passed);
  CHECK(rep.at_N.distance == 0.0);
  REQUIRE(rep.refinement.size() == 4);
  CHECK(fs::exists(dir.path() / "stationary" / "refinement.csv"));
  CHECK(fs::exists(dir.path() / "stationary" / "compare.json"));
}

TEST_CASE("command-line exit codes") {
  ScratchDir dir("cli");
  const std::string out = " --out \"" + dir.path().string() + "\"";
  const std::string stationary = "\"" + (kScenarios / "stationary.json").string() + "\"";
  CHECK(run_cli("run " + stationary + " --stage solve" + out) == 0);
  CHECK(fs::exists(dir.path() / "stationary" / "summary.csv"));
  CHECK(run_cli("run " + stationary + " --stage warp" + out) == 2);
  CHECK(run_cli("run \"" + (dir.path() / "absent.json").string() + "\"" + out) == 2);
  CHECK(run_cli("frobnicate") == 2);

  json strict = base_scenario();
  strict["name"] = "strict";
  strict["tolerances"]["oracle"] = 1e-12;
  const fs::path strict_path = dir.path() / "strict.json";
  std::ofstream(strict_path) << strict.dump();
  CHECK(run_cli("run \"" + strict_path.string() + "\" --stage solve" + out) == 1);

  CHECK(run_cli("compare " + stationary + out) == 0);
}

}  // TEST_SUITE
