#include "hmfem/study.hpp"

#include <chrono>
#include <cmath>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_interior_constraint(const SaddleState& state, const TargetManifold& manifold) {
  const auto& mesh = state.u.mesh();
  const int m = state.u.components();
  Eigen::VectorXd s(m);
  double worst = 0.0;
  for (std::size_t z = 0; z < mesh.num_vertices(); ++z) {
    if (mesh.is_boundary(z)) continue;
    for (int i = 0; i < m; ++i) s[i] = state.u(z, i);
    worst = std::max(worst, std::abs(manifold.value(s)));
  }
  return worst;
}

}  // namespace

int ExperimentSpec::dim() const { return exact_solution(example, make_manifold(*this).get()).dim; }

void ExperimentSpec::validate() const {
  if (level_min < 0 || level_max < level_min) throw ConfigError("level range must be nonempty and nonnegative");
  if (!(eps_stop > 0.0)) throw ConfigError("eps_stop must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(frequency > 0.0)) throw ConfigError("noise frequency must be positive");
  if (!(mesh_perturbation >= 0.0 && mesh_perturbation < 0.25))
    throw ConfigError("mesh perturbation must lie in [0, 0.25)");
  if (rho_rules.empty()) throw ConfigError("at least one rho rule is required");
  if (!(kkt.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  const int d = dim();
  if (d == 3 && level_max > kMaxLevel3d && !allow_large_levels)
    throw ConfigError("3D levels above " + std::to_string(kMaxLevel3d) + " need allow_large_levels");
}

double nominal_mesh_size(int dim, int level) { return std::sqrt(static_cast<double>(dim)) * std::ldexp(1.0, -level); }

ManifoldPtr make_manifold(const ExperimentSpec& spec) {
  if (spec.manifold.empty()) return std::make_shared<const TargetManifold>(default_manifold(spec.example));
  if (spec.manifold == "sphere") {
    const int m = spec.semi_axes.empty() ? 3 : static_cast<int>(spec.semi_axes.size());
    return std::make_shared<const TargetManifold>(sphere(m));
  }
  if (spec.manifold == "ellipsoid") {
    if (spec.semi_axes.empty()) throw ConfigError("ellipsoid needs semi_axes");
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(spec.semi_axes.data(),
                                                                 static_cast<Eigen::Index>(spec.semi_axes.size()));
    return std::make_shared<const TargetManifold>(ellipsoid(a));
  }
  throw ConfigError("unknown manifold '" + spec.manifold + "'");
}

LevelMesh make_level_mesh(const ExperimentSpec& spec, int level) {
  const int d = spec.dim();
  LevelMesh out;
  std::optional<PerturbSpec> perturb;
  if (spec.mesh_mode == MeshMode::perturbed) {
    perturb = PerturbSpec{spec.mesh_perturbation, spec.seed};
    for (int k = 0; k < level; ++k) out.seeds.push_back(spec.seed + static_cast<std::uint64_t>(k));
  }
  out.mesh = std::make_shared<const SimplicialMesh>(build_mesh(d, level, perturb));
  return out;
}

NewtonOptions newton_options(const ExperimentSpec& spec, int level) {
  NewtonOptions options;
  options.eps_stop = spec.eps_stop;
  options.max_iter = spec.max_iter;
  options.multiplier_norm_scale = kMultiplierScale;
  options.kkt = spec.kkt;
  if (spec.iterative_from_level && level >= *spec.iterative_from_level) options.kkt.method = KktMethod::iterative;
  return options;
}

SolvedLevel solve_level(const ExperimentSpec& spec, int level, RhoRule rho_rule) {
  const auto start = Clock::now();
  LevelRun run;
  run.level = level;
  const ManifoldPtr manifold = make_manifold(spec);
  const LevelMesh lm = make_level_mesh(spec, level);
  const auto& mesh = *lm.mesh;
  run.n_vertices = mesh.num_vertices();
  run.h = nominal_mesh_size(mesh.dim(), level);
  run.h_max = mesh.h_max();
  run.rho = rho_value(rho_rule, run.h);
  run.mesh_seeds = lm.seeds;

  SystemPolicy policy;
  policy.allow_nonquadratic_3d = spec.allow_nonquadratic_3d;
  auto system = std::make_shared<const SaddleSystem>(make_example_system(spec.example, lm.mesh, manifold, policy));
  const SaddleState initial = perturbed_start(*system, spec.example, spec.frequency, run.rho);
  NewtonResult result = newton_solve(*system, initial, newton_options(spec, level));
  run.trace = std::move(result.trace);
  SaddleState state = std::move(result.state);

  if (run.trace.converged()) {
    run.energy = dirichlet_energy(state.u);
    run.constraint_violation = max_interior_constraint(state, *manifold);
    const ExampleFields fields = exact_solution(spec.example, manifold.get());
    if (fields.has_exact) {
      const InverseLaplacian inverse(lm.mesh, spec.pairing);
      ErrorRecord rec = error_X(state.u, reported_multiplier(state), fields.u, fields.lambda, &inverse);
      rec.h = run.h;
      run.errors = rec;
    }
  } else {
    run.failure = to_string(run.trace.status) + ": " + run.trace.message;
  }
  run.seconds = seconds_since(start);
  return SolvedLevel{std::move(run), std::move(system), std::move(state)};
}

bool ConvergenceReport::all_converged() const {
  for (const auto& r : runs)
    if (!r.ok()) return false;
  return !runs.empty();
}

ConvergenceReport run_convergence_study(const ExperimentSpec& spec, const ProgressCallback& progress) {
  spec.validate();
  const auto start = Clock::now();
  ConvergenceReport report;
  report.spec = spec;
  for (int level = spec.level_min; level <= spec.level_max; ++level) {
    LevelRun run;
    try {
      run = solve_level(spec, level, spec.rho).run;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      run.level = level;
      run.failure = e.what();
    }
    if (run.errors) {
      report.records.push_back(*run.errors);
      fill_eoc(report.records);
      run.errors = report.records.back();
    }
    if (progress) {
      std::string line = "level " + std::to_string(level) + ": ";
      line += run.ok() ? std::to_string(run.trace.iterations()) + " Newton steps" : run.failure;
      if (run.errors) line += ", e_X = " + std::to_string(run.errors->e_X);
      progress(line);
    }
    report.runs.push_back(std::move(run));
  }
  report.total_seconds = seconds_since(start);
  return report;
}

const BasinCell* BasinReport::find(int level, RhoRule rule) const {
  for (const auto& c : cells)
    if (c.level == level && c.rule == rule) return &c;
  return nullptr;
}

bool BasinReport::all_converged() const {
  for (const auto& c : cells)
    if (!c.converged()) return false;
  return !cells.empty();
}

BasinReport run_basin_study(const ExperimentSpec& spec, const ProgressCallback& progress) {
  spec.validate();
  const auto start = Clock::now();
  BasinReport report;
  report.spec = spec;
  const ManifoldPtr manifold = make_manifold(spec);
  SystemPolicy policy;
  policy.allow_nonquadratic_3d = spec.allow_nonquadratic_3d;
  for (int level = spec.level_min; level <= spec.level_max; ++level) {
    const LevelMesh lm = make_level_mesh(spec, level);
    const SaddleSystem system = make_example_system(spec.example, lm.mesh, manifold, policy);
    const double h = nominal_mesh_size(lm.mesh->dim(), level);
    for (RhoRule rule : spec.rho_rules) {
      const auto cell_start = Clock::now();
      BasinCell cell;
      cell.level = level;
      cell.rule = rule;
      cell.rho = rho_value(rule, h);
      try {
        const SaddleState initial = perturbed_start(system, spec.example, spec.frequency, cell.rho);
        const NewtonResult result = newton_solve(system, initial, newton_options(spec, level));
        cell.status = result.trace.status;
        cell.iterations = result.trace.iterations();
        cell.message = result.trace.message;
      } catch (const Error& e) {
        cell.status = NewtonStatus::linear_solve_failure;
        cell.message = e.what();
      }
      cell.seconds = seconds_since(cell_start);
      if (progress)
        progress("level " + std::to_string(level) + ", " + column_name(rule) + ": " +
                 (cell.converged() ? std::to_string(cell.iterations) : to_string(cell.status)));
      report.cells.push_back(std::move(cell));
    }
  }
  report.total_seconds = seconds_since(start);
  return report;
}

}  // namespace hmfem
