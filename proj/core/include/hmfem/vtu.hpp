#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "hmfem/solver.hpp"

namespace hmfem {

/// ASCII VTK unstructured grid with point data "u" (m components) and
/// "lambda" (reported normalization). 2D meshes are embedded in z = 0.
void write_vtu(std::ostream& out, const SaddleState& state);
/// Throws IoError if the file cannot be written.
void export_vtu(const SaddleState& state, const std::filesystem::path& path);

/// What a reader recovers from a file written by write_vtu.
struct VtuSummary {
  std::size_t n_points = 0;
  std::size_t n_cells = 0;
  /// Point-data array name -> (components, values read).
  std::map<std::string, std::pair<int, std::size_t>> point_arrays;
  /// Largest | |u(z)| - 1 | over all points.
  double max_unit_defect = 0;
};
/// Minimal parser for the files written above; throws IoError otherwise.
VtuSummary read_vtu_summary(const std::filesystem::path& path);

}  // namespace hmfem
