#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "hmfem/mesh.hpp"

namespace hmfem {

/// Compressed sparse row matrix; column indices sorted, no duplicates.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

using MeshPtr = std::shared_ptr<const SimplicialMesh>;

/// Pointwise callbacks. Points have `dim` coordinates; vector fields write
/// `m` values into `out`.
using ScalarField = std::function<double(std::span<const double> x)>;
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

/// m-vector-valued P1 function stored by nodal values, node-major:
/// coefficient (z, i) sits at z * m + i.
class FeFunction {
 public:
  FeFunction(MeshPtr mesh, int components);
  FeFunction(MeshPtr mesh, int components, Vector coefficients);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int components() const { return components_; }
  std::size_t num_nodes() const { return mesh_->num_vertices(); }

  Vector& coefficients() { return coefficients_; }
  const Vector& coefficients() const { return coefficients_; }

  std::span<const double> value(std::size_t z) const {
    return {coefficients_.data() + z * components_, static_cast<std::size_t>(components_)};
  }
  std::span<double> value(std::size_t z) {
    return {coefficients_.data() + z * components_, static_cast<std::size_t>(components_)};
  }
  double operator()(std::size_t z, int i = 0) const { return coefficients_[z * components_ + i]; }
  double& operator()(std::size_t z, int i = 0) { return coefficients_[z * components_ + i]; }

  /// Value at barycentric coordinates `bary` in simplex t.
  void evaluate(std::size_t t, std::span<const double> bary, std::span<double> out) const;

 private:
  MeshPtr mesh_;
  int components_;
  Vector coefficients_;
};

/// Per-simplex volumes and gradients of the barycentric coordinates.
class P1Geometry {
 public:
  explicit P1Geometry(const SimplicialMesh& mesh);

  double volume(std::size_t t) const { return volumes_[t]; }
  /// Gradient of the k-th local basis function on simplex t (dim entries).
  std::span<const double> gradient(std::size_t t, int k) const {
    return {gradients_.data() + (t * (dim_ + 1) + k) * dim_, static_cast<std::size_t>(dim_)};
  }
  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<double> volumes_;
  std::vector<double> gradients_;
};

/// Lumped mass weights beta_z = integral of the hat function phi_z.
struct LumpedWeights {
  Vector beta;
};

/// Maps vertex indices to consecutive indices of interior (free) vertices.
class FreeNodeMap {
 public:
  explicit FreeNodeMap(const SimplicialMesh& mesh);
  /// -1 for boundary vertices.
  Index free_index(std::size_t z) const { return free_index_[z]; }
  std::size_t vertex(std::size_t k) const { return vertices_[k]; }
  std::size_t size() const { return vertices_.size(); }

 private:
  std::vector<Index> free_index_;
  std::vector<std::size_t> vertices_;
};

FeFunction nodal_interpolate(const MeshPtr& mesh, const VectorField& f, int m);
FeFunction nodal_interpolate(const MeshPtr& mesh, const ScalarField& f);

/// Stiffness matrix (grad phi_z e_i, grad phi_y e_j) of the m-vector P1 space.
/// Components are blocked: index i * #vertices + z.
SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, int m = 1);

/// Consistent scalar P1 mass matrix.
SparseMatrix assemble_mass(const SimplicialMesh& mesh);

LumpedWeights lumped_weights(const SimplicialMesh& mesh);

/// Lumped inner product (v, w)_h = sum_z beta_z v(z) . w(z).
double discrete_inner(const FeFunction& v, const FeFunction& w);
/// Exact L2 inner product of P1 functions.
double consistent_l2_inner(const FeFunction& v, const FeFunction& w);

double l2_norm(const FeFunction& v);
double discrete_norm(const FeFunction& v);

/// Integral of f over the simplex t using the degree-4/5 rule.
double integrate(const SimplicialMesh& mesh, std::size_t t, const ScalarField& f);

/// L2 norm of (v_h - f) with the mesh quadrature; v_h scalar.
double l2_distance(const FeFunction& v, const ScalarField& f);

/// Clement quasi-interpolant of a scalar field or of a P1 function (any m):
/// nodal value at z is the average over supp phi_z; with `dirichlet`, boundary
/// values are set to zero.
FeFunction clement_interpolate(const MeshPtr& mesh, const ScalarField& alpha, bool dirichlet);
FeFunction clement_interpolate(const FeFunction& alpha, bool dirichlet);

/// Projection defined through (P v, phi_h)_h = (v, phi_h), i.e. nodal values
/// (v, phi_z) / beta_z; boundary values zero with `dirichlet`.
FeFunction modified_l2_projection(const MeshPtr& mesh, const ScalarField& v, bool dirichlet);
FeFunction modified_l2_projection(const FeFunction& v, bool dirichlet);

/// Debug dump, one `row col value` line per stored entry.
void dump_triplets(std::ostream& out, const SparseMatrix& matrix);

}  // namespace hmfem
