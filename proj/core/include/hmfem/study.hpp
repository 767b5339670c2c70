#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmfem/analysis.hpp"
#include "hmfem/examples.hpp"
#include "hmfem/mesh.hpp"
#include "hmfem/solver.hpp"

namespace hmfem {

enum class MeshMode { uniform, perturbed };

/// Highest 3D level run without `allow_large_levels` (35937 vertices).
inline constexpr int kMaxLevel3d = 5;

/// Everything that defines a study. Defaults follow the Newton experiments:
/// f = 10, eps_stop = 1e-10, at most 25 iterations.
struct ExperimentSpec {
  ExampleId example = ExampleId::inv_stereo;
  /// "sphere" or "ellipsoid"; empty selects the example's default target.
  std::string manifold;
  std::vector<double> semi_axes;
  int level_min = 1;
  int level_max = 5;

  MeshMode mesh_mode = MeshMode::uniform;
  std::uint64_t seed = 0;
  double mesh_perturbation = PerturbSpec{}.magnitude;

  double frequency = 10.0;
  /// Start perturbation of a convergence study.
  RhoRule rho = RhoRule::zero;
  /// Columns of a basin study.
  std::vector<RhoRule> rho_rules{kAllRhoRules.begin(), kAllRhoRules.end()};

  double eps_stop = 1e-10;
  int max_iter = 25;
  KktOptions kkt{};
  /// Switch to the iterative KKT method from this level on (3D runs only).
  std::optional<int> iterative_from_level;
  DualPairing pairing = DualPairing::lumped;

  bool allow_large_levels = false;
  bool allow_nonquadratic_3d = false;

  int dim() const;
  /// Throws ConfigError when the settings are inconsistent.
  void validate() const;
};

/// Nominal mesh size sqrt(d) 2^-l of the unperturbed level-l mesh.
double nominal_mesh_size(int dim, int level);

/// Target manifold selected by `spec`.
ManifoldPtr make_manifold(const ExperimentSpec& spec);

/// Mesh of one level, together with the seeds used for its refinement steps.
struct LevelMesh {
  MeshPtr mesh;
  std::vector<std::uint64_t> seeds;
};
LevelMesh make_level_mesh(const ExperimentSpec& spec, int level);

/// Newton options for one level of a study.
NewtonOptions newton_options(const ExperimentSpec& spec, int level);

struct LevelRun {
  int level = 0;
  std::size_t n_vertices = 0;
  double h = 0;      ///< nominal
  double h_max = 0;  ///< measured
  double rho = 0;    ///< start perturbation amplitude
  std::vector<std::uint64_t> mesh_seeds;
  NewtonTrace trace;
  std::optional<ErrorRecord> errors;
  double energy = 0;                ///< Dirichlet energy of u_h
  double constraint_violation = 0;  ///< max over interior nodes of |g(u_h(z))|
  double seconds = 0;
  std::string failure;  ///< empty on success

  bool ok() const { return failure.empty(); }
};

struct ConvergenceReport {
  ExperimentSpec spec;
  std::vector<LevelRun> runs;
  /// Error records of the converged levels with their EOCs.
  std::vector<ErrorRecord> records;
  double total_seconds = 0;

  bool all_converged() const;
};

/// Called after every finished level or basin cell.
using ProgressCallback = std::function<void(const std::string&)>;

/// Solves every level of `spec` from (I_h u + xi_h, I_{h,D} lambda + zeta_h)
/// and measures the errors. A failing level is recorded and the study goes on.
ConvergenceReport run_convergence_study(const ExperimentSpec& spec, const ProgressCallback& progress = {});

/// Solves a single level; also returns the final state.
struct SolvedLevel {
  LevelRun run;
  std::shared_ptr<const SaddleSystem> system;
  SaddleState state;
};
SolvedLevel solve_level(const ExperimentSpec& spec, int level, RhoRule rho_rule);

struct BasinCell {
  int level = 0;
  RhoRule rule = RhoRule::zero;
  double rho = 0;
  NewtonStatus status = NewtonStatus::no_convergence;
  int iterations = 0;
  double seconds = 0;
  std::string message;

  bool converged() const { return status == NewtonStatus::converged; }
};

struct BasinReport {
  ExperimentSpec spec;
  std::vector<BasinCell> cells;
  double total_seconds = 0;

  const BasinCell* find(int level, RhoRule rule) const;
  bool all_converged() const;
};

/// Newton iteration counts for every (level, rho-rule) pair of `spec`.
BasinReport run_basin_study(const ExperimentSpec& spec, const ProgressCallback& progress = {});

}  // namespace hmfem
