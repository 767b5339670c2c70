#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmfem/fem.hpp"
#include "hmfem/linear_solver.hpp"
#include "hmfem/manifolds.hpp"

namespace hmfem {

/// Dirichlet data u_D and its nodal interpolant on the current mesh.
struct BoundaryData {
  VectorField field;
  FeFunction nodal;
};

/// Interpolates `field` and checks |g(u_D(z))| <= 1e-12 at boundary vertices.
BoundaryData make_boundary_data(const MeshPtr& mesh, const TargetManifold& manifold,
                                VectorField field);

/// Iterate (u_h, lambda_h): u_h m-valued with prescribed boundary values,
/// lambda_h scalar vanishing on the boundary.
struct SaddleState {
  FeFunction u;
  FeFunction lambda;
};

struct SystemPolicy {
  /// Non-quadratic targets in three space dimensions are refused unless set.
  bool allow_nonquadratic_3d = false;
};

/// Discrete saddle-point system for harmonic maps into {g = 0} on a fixed mesh.
///
/// The residual tested with (v_h, mu_h) on interior nodes is
///   (grad u_h, grad v_h) + (lambda_h, Dg(u_h) . v_h)_h + (mu_h, g(u_h))_h
/// and the Jacobian is its exact derivative. Unknowns are ordered with the
/// u-block first (free node-major, component-minor) followed by lambda.
class SaddleSystem {
 public:
  SaddleSystem(MeshPtr mesh, ManifoldPtr manifold, BoundaryData boundary, SystemPolicy policy = {});

  const SimplicialMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const TargetManifold& manifold() const { return *manifold_; }
  const BoundaryData& boundary() const { return boundary_; }
  const FreeNodeMap& free_nodes() const { return free_; }
  const LumpedWeights& weights() const { return weights_; }
  int m() const { return manifold_->ambient_dim(); }

  std::size_t num_free_nodes() const { return free_.size(); }
  std::size_t num_u_unknowns() const { return free_.size() * static_cast<std::size_t>(m()); }
  std::size_t num_unknowns() const { return num_u_unknowns() + free_.size(); }

  /// Scalar stiffness and consistent mass restricted to interior nodes.
  const SparseMatrix& stiffness_free() const { return stiffness_ff_; }
  const SparseMatrix& mass_free() const { return mass_ff_; }
  /// Scalar stiffness on all nodes.
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// Builds a state, overwriting boundary values of u with the Dirichlet
  /// interpolant and boundary values of lambda with zero.
  SaddleState make_state(FeFunction u, FeFunction lambda) const;
  /// Throws if `state` violates the invariants.
  void validate(const SaddleState& state) const;

  /// Interior-node restriction of u and lambda in unknown ordering.
  Vector pack(const SaddleState& state) const;
  /// state + correction (correction in unknown ordering).
  SaddleState apply_correction(const SaddleState& state, const Vector& correction) const;

  /// H1 seminorm of the u-part plus L2 norm of the lambda-part of a correction,
  /// the latter multiplied by `multiplier_scale`.
  double correction_norm(const Vector& correction, double multiplier_scale = 1.0) const;

 private:
  MeshPtr mesh_;
  ManifoldPtr manifold_;
  BoundaryData boundary_;
  FreeNodeMap free_;
  LumpedWeights weights_;
  SparseMatrix stiffness_;
  SparseMatrix stiffness_ff_;
  SparseMatrix mass_ff_;
};

Vector assemble_residual(const SaddleSystem& system, const SaddleState& state);
SparseMatrix assemble_jacobian(const SaddleSystem& system, const SaddleState& state);
/// Constraint block B (rows: interior nodes, columns: u unknowns).
SparseMatrix assemble_constraint_block(const SaddleSystem& system, const SaddleState& state);
double residual_euclidean_norm(const SaddleSystem& system, const SaddleState& state);

/// Dual norm of the residual against the X_h norm |grad v| + |mu|_{H^-1_h}.
double residual_dual_norm(const SaddleSystem& system, const SaddleState& state);

/// Smallest generalized singular value of B with respect to the H1 seminorm on
/// the u-block and the discrete H^-1 norm on the multiplier block. Dense; at
/// most `max_free_nodes` interior nodes.
double infsup_diagnostic(const SaddleSystem& system, const SaddleState& state,
                         std::size_t max_free_nodes = 2000);

struct NewtonOptions {
  double eps_stop = 1e-10;
  int max_iter = 25;
  /// Factor applied to the multiplier correction in the stopping norm.
  double multiplier_norm_scale = 1.0;
  KktOptions kkt{};
};

struct NewtonStep {
  int step = 0;                ///< 1-based Newton step
  double correction_norm = 0;  ///< |grad d^k| + |delta^k|
  double residual_norm = 0;    ///< Euclidean norm of F_h at the iterate the step starts from
  double seconds = 0;          ///< wall time since the start of the solve
};

enum class NewtonStatus { converged, no_convergence, linear_solve_failure, diverged };

std::string to_string(NewtonStatus status);

struct NewtonTrace {
  std::vector<NewtonStep> steps;
  double final_residual = 0;  ///< Euclidean residual norm of the returned state
  double total_seconds = 0;
  NewtonStatus status = NewtonStatus::no_convergence;
  std::string message;

  bool converged() const { return status == NewtonStatus::converged; }
  int iterations() const { return static_cast<int>(steps.size()); }
};

struct NewtonResult {
  SaddleState state;
  NewtonTrace trace;
};

/// Plain Newton iteration (no damping or line search) until the correction
/// norm drops below eps_stop. Failures are reported through the trace.
NewtonResult newton_solve(const SaddleSystem& system, const SaddleState& initial,
                          const NewtonOptions& options = {});

/// CSV with columns step,correction_norm,residual_norm,seconds.
void write_trace_csv(std::ostream& out, const NewtonTrace& trace);

}  // namespace hmfem
