#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <regex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dgflow/errors.hpp"
#include "dgflow/pipeline.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kAssertionFailed = 1;
constexpr int kUsage = 2;

std::pair<int, int> parse_grid(const std::string& text) {
  static const std::regex pattern(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw dgflow::SchemaError("--grid expects NtxNx, e.g. 64x64");
  const int nt = std::stoi(m[1].str());
  const int nx = std::stoi(m[2].str());
  if (nt < 2 || nx < 3) throw dgflow::SchemaError("--grid: need Nt >= 2 and Nx >= 3");
  return {nt, nx};
}

void print_run(const dgflow::RunResult& r) {
  for (const auto& s : r.stages) {
    std::printf("%-16s %-6s %-8s value=%-12.5g residual=%-12.5g gap=%-12.5g %.2fs\n",
                r.scenario.c_str(), dgflow::stage_name(s.stage), s.status.c_str(), s.value, s.residual,
                s.gap, s.runtime_s);
    for (const auto& f : s.failures) std::printf("    %s\n", f.c_str());
    if (s.status == "fail") std::printf("    report: %s\n", s.report.string().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct minimization of the weighted De Giorgi functional and its relaxations"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  std::string stage;
  std::string out_dir = "out";
  std::string grid;
  int n_override = 0;
  bool no_timing = false;

  auto* run = app.add_subcommand("run", "Run the pipeline stages of one or more scenarios");
  run->add_option("scenario", files, "Scenario JSON files")->required();
  run->add_option("--stage", stage, "all|solve|mms|relax|dual (default: the scenario's list)");
  run->add_option("--out", out_dir, "Artifact directory")->capture_default_str();
  run->add_option("--grid", grid, "Relaxation grid NtxNx");
  run->add_option("--n", n_override, "Time steps N")->check(CLI::Range(2, 100000000));
  run->add_flag("--no-timing", no_timing, "Write runtimes as 0 for reproducible files");

  auto* compare = app.add_subcommand("compare", "Direct transcription against minimizing movements");
  compare->add_option("scenario", files, "Scenario JSON files")->required();
  compare->add_option("--out", out_dir, "Artifact directory")->capture_default_str();
  compare->add_option("--n", n_override, "Time steps N")->check(CLI::Range(2, 100000000));
  compare->add_flag("--no-timing", no_timing, "Write runtimes as 0 for reproducible files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  }

  dgflow::RunOptions opts;
  opts.out_dir = out_dir;
  opts.record_timing = !no_timing;
  std::vector<dgflow::Scenario> scenarios;
  try {
    if (!stage.empty()) opts.stages = dgflow::parse_stages(stage);
    if (!grid.empty()) opts.grid = parse_grid(grid);
    if (n_override > 0) opts.N = n_override;
    for (const auto& f : files) scenarios.push_back(dgflow::load_scenario(f));
  } catch (const dgflow::SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }

  std::vector<int> status(scenarios.size(), kPass);
  std::mutex print_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < scenarios.size();) {
      try {
        if (*run) {
          const dgflow::RunResult r = dgflow::run_scenario(scenarios[i], opts);
          std::lock_guard lock(print_mutex);
          print_run(r);
          std::printf("    summary: %s\n", (r.dir / "summary.csv").string().c_str());
          status[i] = r.passed() ? kPass : kAssertionFailed;
        } else {
          const dgflow::ComparisonReport c = dgflow::compare_solvers(scenarios[i], opts);
          std::lock_guard lock(print_mutex);
          std::printf("%-16s compare N=%d distance=%.5g J_direct=%.5g J_mms=%.5g  %s\n",
                      c.scenario.c_str(), c.N, c.at_N.distance, c.at_N.value_direct,
                      c.at_N.value_mms, c.passed ? "pass" : "fail");
          for (const auto& r : c.refinement)
            std::printf("    N=%-5d distance=%-11.4g err_direct=%-11.4g err_mms=%-11.4g residual=%.4g\n",
                        r.N, r.distance, r.error_direct, r.error_mms, r.residual_direct);
          for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
          std::printf("    report: %s\n", c.report.string().c_str());
          status[i] = c.passed ? kPass : kAssertionFailed;
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(print_mutex);
        std::fprintf(stderr, "%s: %s\n", scenarios[i].name.c_str(), e.what());
        status[i] = kAssertionFailed;
      }
    }
  };
  const unsigned threads =
      std::min<unsigned>(dgflow::worker_threads(), static_cast<unsigned>(scenarios.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  int code = kPass;
  for (int s : status) code = std::max(code, s);
  return code;
}
