// hmfem: command line driver for the harmonic-map studies.
//
// Exit codes: 0 on success, 2 if a level or basin cell did not converge,
// 1 on usage, configuration or I/O errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hmfem/error.hpp"
#include "hmfem/report.hpp"
#include "hmfem/study.hpp"
#include "hmfem/vtu.hpp"

namespace fs = std::filesystem;
using namespace hmfem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

struct CommonArgs {
  std::string config;
  std::optional<int> level;
  std::optional<std::uint64_t> seed;
  std::string out = "hmfem-out";
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON study configuration")->check(CLI::ExistingFile);
  cmd->add_option("--level", args.level, "Level override")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", args.seed, "Mesh perturbation seed override");
  cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
  cmd->add_flag("-q,--quiet", args.quiet, "No progress output");
}

ExperimentSpec base_spec(const CommonArgs& args) {
  ExperimentSpec spec = args.config.empty() ? ExperimentSpec{} : load_spec(args.config);
  if (args.seed) spec.seed = *args.seed;
  return spec;
}

fs::path prepare_out(const std::string& dir) {
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  return out;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

ProgressCallback progress_for(const CommonArgs& args) {
  if (args.quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

void print_run(const LevelRun& run) {
  std::cout << "level " << run.level << ": " << run.n_vertices << " vertices, "
            << to_string(run.trace.status) << " after " << run.trace.iterations() << " Newton steps, residual "
            << run.trace.final_residual << '\n';
  if (run.ok()) std::cout << "energy " << run.energy << ", max |g(u_h(z))| " << run.constraint_violation << '\n';
  if (run.errors) std::cout << "e_X " << run.errors->e_X << '\n';
}

int cmd_convergence(const CommonArgs& args) {
  ExperimentSpec spec = base_spec(args);
  if (args.level) spec.level_max = *args.level;
  spec.level_min = std::min(spec.level_min, spec.level_max);
  const ConvergenceReport report = run_convergence_study(spec, progress_for(args));
  const fs::path out = prepare_out(args.out);
  write_file(out / "convergence.csv", [&](std::ostream& s) { write_convergence_csv(s, report); });
  write_file(out / "convergence.json", [&](std::ostream& s) { s << convergence_report_json(report) << '\n'; });
  for (const auto& run : report.runs)
    write_file(out / ("trace_level" + std::to_string(run.level) + ".csv"),
               [&](std::ostream& s) { write_trace_csv(s, run.trace); });
  write_convergence_csv(std::cout, report);
  return report.all_converged() ? kExitOk : kExitNotConverged;
}

int cmd_basin(const CommonArgs& args) {
  ExperimentSpec spec = base_spec(args);
  if (args.level) spec.level_max = *args.level;
  spec.level_min = std::min(spec.level_min, spec.level_max);
  const BasinReport report = run_basin_study(spec, progress_for(args));
  const fs::path out = prepare_out(args.out);
  write_file(out / "basin.csv", [&](std::ostream& s) { write_basin_csv(s, report); });
  write_file(out / "basin.json", [&](std::ostream& s) { s << basin_report_json(report) << '\n'; });
  write_basin_csv(std::cout, report);
  return report.all_converged() ? kExitOk : kExitNotConverged;
}

int cmd_solve(const CommonArgs& args, const std::string& example, const std::string& rho,
              const std::string& vtu_path, const std::string& trace_path) {
  ExperimentSpec spec = base_spec(args);
  if (!example.empty()) spec.example = parse_example(example);
  const int level = args.level.value_or(spec.level_max);
  spec.level_min = spec.level_max = level;
  spec.validate();
  const SolvedLevel solved = solve_level(spec, level, rho.empty() ? spec.rho : parse_rho_rule(rho));
  print_run(solved.run);
  if (!vtu_path.empty()) export_vtu(solved.state, vtu_path);
  if (!trace_path.empty()) write_file(trace_path, [&](std::ostream& s) { write_trace_csv(s, solved.run.trace); });
  return solved.run.ok() ? kExitOk : kExitNotConverged;
}

int cmd_export(const CommonArgs& args) {
  ExperimentSpec spec = base_spec(args);
  const int level = args.level.value_or(spec.level_max);
  spec.level_min = spec.level_max = level;
  spec.validate();
  const SolvedLevel solved = solve_level(spec, level, spec.rho);
  print_run(solved.run);
  const fs::path out = prepare_out(args.out);
  const std::string stem = to_string(spec.example) + "_level" + std::to_string(level);
  export_vtu(solved.state, out / (stem + ".vtu"));
  write_file(out / (stem + ".mesh"), [&](std::ostream& s) { write_mesh(s, solved.state.u.mesh()); });
  write_file(out / (stem + "_trace.csv"), [&](std::ostream& s) { write_trace_csv(s, solved.run.trace); });
  return solved.run.ok() ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete harmonic maps by Newton iteration on a lumped saddle-point system"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  CommonArgs convergence_args, basin_args, solve_args, export_args;
  auto* convergence = app.add_subcommand("convergence", "Error and EOC table over a level range");
  add_common(convergence, convergence_args);
  auto* basin = app.add_subcommand("basin", "Newton iteration counts for the rho rules");
  add_common(basin, basin_args);

  auto* solve = app.add_subcommand("solve", "Solve one level");
  add_common(solve, solve_args);
  std::string example, rho, vtu_path, trace_path;
  solve->add_option("--example", example, "inv_stereo, radial or ellipsoid_custom");
  solve->add_option("--rho", rho, "Start perturbation rule: 0, h, h^3/4, h^1/2, h^1/4, h^0");
  solve->add_option("--export", vtu_path, "Write the solution as VTU");
  solve->add_option("--trace", trace_path, "Write the Newton trace as CSV");

  auto* exporter = app.add_subcommand("export", "Solve one level and write VTU, mesh and trace files");
  add_common(exporter, export_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*convergence) return cmd_convergence(convergence_args);
    if (*basin) return cmd_basin(basin_args);
    if (*solve) return cmd_solve(solve_args, example, rho, vtu_path, trace_path);
    if (*exporter) return cmd_export(export_args);
  } catch (const Error& e) {
    std::cerr << "hmfem: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
