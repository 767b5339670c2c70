#pragma once

#include <memory>

#include "hmfem/fem.hpp"

namespace hmfem {

enum class KktMethod { direct, iterative };

struct KktOptions {
  KktMethod method = KktMethod::direct;
  /// Required relative residual |Jx - b| / |b|.
  double tolerance = 1e-10;
  int max_krylov_iterations = 2000;
  int gmres_restart = 200;
  double ilut_drop_tolerance = 1e-6;
  int ilut_fill_factor = 20;
};

/// Solver for the symmetric indefinite saddle-point systems of the Newton
/// step. The direct path is a sparse LU (UMFPACK) whose symbolic analysis is
/// reused while the sparsity pattern stays the same; the iterative path is
/// restarted GMRES with an incomplete-LU preconditioner.
class KktSolver {
 public:
  explicit KktSolver(KktOptions options = {});
  ~KktSolver();
  KktSolver(KktSolver&&) noexcept;
  KktSolver& operator=(KktSolver&&) noexcept;

  /// Throws LinearSolveFailure on breakdown or when the tolerance is missed.
  Vector solve(const SparseMatrix& matrix, const Vector& rhs);

  const KktOptions& options() const { return options_; }
  /// Relative residual of the last solve.
  double last_relative_residual() const { return last_residual_; }

 private:
  struct Impl;
  KktOptions options_;
  std::unique_ptr<Impl> impl_;
  double last_residual_ = 0.0;
};

/// One-shot convenience wrapper around KktSolver.
Vector solve_kkt(const SparseMatrix& matrix, const Vector& rhs, const KktOptions& options = {});

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseMatrix& matrix);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  Vector solve(const Vector& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hmfem
