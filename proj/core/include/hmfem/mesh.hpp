#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hmfem {

using Index = std::int32_t;

/// Random displacement of newly created interior vertices during refinement.
struct PerturbSpec {
  /// Bound on the shift relative to the parent edge length, in [0, 0.25).
  /// Shifts accumulate over levels, so the default is kept small.
  double magnitude = 0.04;
  std::uint64_t seed = 0;
};

/// Conforming simplicial triangulation of the cube (-1/2, 1/2)^d, d in {2, 3}.
///
/// Coordinates are stored interleaved (vertex-major), simplices as (d+1)-tuples
/// of 0-based vertex indices with positive orientation. Instances are
/// immutable once constructed.
class SimplicialMesh {
 public:
  SimplicialMesh(int dim, std::vector<double> coordinates, std::vector<Index> simplices,
                 int level);

  int dim() const { return dim_; }
  int level() const { return level_; }
  std::size_t num_vertices() const { return boundary_.size(); }
  std::size_t num_simplices() const { return simplices_.size() / static_cast<std::size_t>(dim_ + 1); }
  int vertices_per_simplex() const { return dim_ + 1; }

  std::span<const double> vertex(std::size_t i) const {
    return {coordinates_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const Index> simplex(std::size_t t) const {
    const auto n = static_cast<std::size_t>(dim_ + 1);
    return {simplices_.data() + t * n, n};
  }
  bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }

  const std::vector<double>& coordinates() const { return coordinates_; }
  const std::vector<Index>& simplices() const { return simplices_; }

  /// Signed volume of simplex t.
  double volume(std::size_t t) const;
  /// Largest edge length of simplex t.
  double diameter(std::size_t t) const;
  /// Maximal simplex diameter over the mesh.
  double h_max() const { return h_max_; }

  std::size_t num_boundary_vertices() const;

 private:
  int dim_;
  int level_;
  std::vector<double> coordinates_;
  std::vector<Index> simplices_;
  std::vector<std::uint8_t> boundary_;
  double h_max_ = 0.0;
};

/// Coarsest triangulation of the unit cube: 2 triangles (d=2) or the Kuhn
/// decomposition into 6 tetrahedra (d=3).
SimplicialMesh base_mesh(int dim);

/// One step of red refinement through edge midpoints. With a perturbation,
/// new interior vertices are displaced randomly; new boundary vertices stay put.
SimplicialMesh refine_uniform(const SimplicialMesh& mesh,
                              const std::optional<PerturbSpec>& perturbation = std::nullopt);

/// base_mesh(dim) refined `level` times. Perturbed refinements use seed
/// `perturbation->seed + k` for the k-th refinement step.
SimplicialMesh build_mesh(int dim, int level,
                          const std::optional<PerturbSpec>& perturbation = std::nullopt);

double mesh_size(const SimplicialMesh& mesh);

double total_volume(const SimplicialMesh& mesh);

/// True if every interior facet is shared by exactly two simplices and every
/// boundary facet lies on the cube boundary.
bool is_conforming(const SimplicialMesh& mesh);

/// Plain text format: header `dim nv ns level`, vertex lines, simplex lines.
void write_mesh(std::ostream& out, const SimplicialMesh& mesh);
SimplicialMesh read_mesh(std::istream& in);

}  // namespace hmfem
