#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "hmfem/study.hpp"

namespace hmfem {

/// Parses a JSON study configuration. Unknown keys are rejected.
///
///   {"example": "inv_stereo", "manifold": "sphere", "semi_axes": [1, 1, 2],
///    "levels": [1, 7],
///    "mesh": {"mode": "perturbed", "seed": 42, "perturbation": 0.04},
///    "noise": {"frequency": 10, "rho": "0", "rho_rules": ["0", "h", "h^1/2"]},
///    "eps_stop": 1e-10, "max_iter": 25,
///    "solver": {"method": "direct", "tolerance": 1e-10, "iterative_from_level": 5},
///    "hm1_pairing": "lumped", "allow_large_levels": false,
///    "allow_nonquadratic_3d": false}
ExperimentSpec parse_spec(std::string_view json_text);
ExperimentSpec load_spec(const std::filesystem::path& path);
/// JSON text of a spec; parse_spec(spec_to_json(s)) reproduces s.
std::string spec_to_json(const ExperimentSpec& spec);

std::string to_string(MeshMode mode);
std::string to_string(KktMethod method);
std::string to_string(DualPairing pairing);

/// Basin table cell for a non-converged run.
inline constexpr std::string_view kNoConvergence = "---";

/// Error table with columns level,n_vertices,e_X,eoc_lambda_l2,eoc_lambda_hm1,eoc_e_X.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);
/// Iteration table with columns level,rho_0,rho_h,... for the rho rules of the study.
void write_basin_csv(std::ostream& out, const BasinReport& report);

/// Self-describing JSON reports: spec echo, per-level records and traces,
/// seeds, library version and runtime.
std::string convergence_report_json(const ConvergenceReport& report);
std::string basin_report_json(const BasinReport& report);

/// Library version string.
std::string version();

}  // namespace hmfem
