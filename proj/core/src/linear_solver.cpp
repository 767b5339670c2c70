#include "hmfem/linear_solver.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/IterativeSolvers>
#include <iostream>
#include <sstream>
#include <vector>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

double relative_residual(const SparseMatrix& matrix, const Vector& x, const Vector& rhs) {
  const double scale = rhs.norm();
  const double r = (matrix * x - rhs).norm();
  return scale > 0.0 ? r / scale : r;
}

}  // namespace

struct KktSolver::Impl {
  Eigen::UmfPackLU<ColMatrix> lu;
  std::vector<int> outer;
  std::vector<int> inner;
  bool analyzed = false;
  // Set once UMFPACK has returned an inaccurate solution; some optimized BLAS
  // builds miscompute its dense kernels on some CPUs.
  bool use_fallback = false;

  Impl() {
    lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
  }

  bool same_pattern(const ColMatrix& m) const {
    if (!analyzed || static_cast<std::size_t>(m.outerSize() + 1) != outer.size() ||
        static_cast<std::size_t>(m.nonZeros()) != inner.size())
      return false;
    return std::equal(outer.begin(), outer.end(), m.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), m.innerIndexPtr());
  }

  void remember_pattern(const ColMatrix& m) {
    outer.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
    inner.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
    analyzed = true;
  }

  Vector umfpack_solve(const ColMatrix& col, const SparseMatrix& matrix, const Vector& rhs, double tol) {
    if (!same_pattern(col)) {
      lu.analyzePattern(col);
      if (lu.info() != Eigen::Success && lu.umfpackControl()(UMFPACK_ORDERING) != UMFPACK_ORDERING_AMD) {
        // UMFPACK built without METIS.
        lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_AMD;
        lu.analyzePattern(col);
      }
      if (lu.info() != Eigen::Success) throw LinearSolveFailure("symbolic factorization failed");
      remember_pattern(col);
    }
    lu.factorize(col);
    if (lu.info() != Eigen::Success) {
      analyzed = false;
      throw LinearSolveFailure("sparse LU factorization broke down (singular matrix)");
    }
    return refine(matrix, rhs, lu, tol);
  }

  static Vector fallback_solve(const ColMatrix& col, const SparseMatrix& matrix, const Vector& rhs, double tol) {
    Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> slu;
    slu.compute(col);
    if (slu.info() != Eigen::Success)
      throw LinearSolveFailure("sparse LU factorization broke down: " + slu.lastErrorMessage());
    return refine(matrix, rhs, slu, tol);
  }

  // A few steps of iterative refinement against the exact matrix.
  template <class Factor>
  static Vector refine(const SparseMatrix& matrix, const Vector& rhs, Factor& factor, double tol) {
    Vector x = factor.solve(rhs);
    for (int k = 0; k < 3 && x.allFinite(); ++k) {
      const Vector r = rhs - matrix * x;
      if (r.norm() <= 0.1 * tol * rhs.norm()) break;
      x += factor.solve(r);
    }
    return x;
  }
};

KktSolver::KktSolver(KktOptions options) : options_(options), impl_(std::make_unique<Impl>()) {}
KktSolver::~KktSolver() = default;
KktSolver::KktSolver(KktSolver&&) noexcept = default;
KktSolver& KktSolver::operator=(KktSolver&&) noexcept = default;

Vector KktSolver::solve(const SparseMatrix& matrix, const Vector& rhs) {
  if (matrix.rows() != matrix.cols()) throw DimensionMismatch("KKT matrix must be square");
  if (matrix.rows() != rhs.size()) throw DimensionMismatch("KKT right-hand side has wrong length");
  if (rhs.norm() == 0.0) {
    last_residual_ = 0.0;
    return Vector::Zero(rhs.size());
  }
  if (!rhs.allFinite()) throw LinearSolveFailure("non-finite right-hand side");

  Vector x;
  if (options_.method == KktMethod::direct) {
    ColMatrix col = matrix;
    col.makeCompressed();
    const double tol = options_.tolerance;
    if (impl_->use_fallback) {
      x = Impl::fallback_solve(col, matrix, rhs, tol);
    } else {
      x = impl_->umfpack_solve(col, matrix, rhs, tol);
      if (!x.allFinite() || relative_residual(matrix, x, rhs) > tol) {
        // Retry without BLAS; keep the fallback only if it does better.
        Vector y = Impl::fallback_solve(col, matrix, rhs, tol);
        if (y.allFinite() && relative_residual(matrix, y, rhs) <= tol) {
          std::cerr << "hmfem: UMFPACK returned an inaccurate solution, using Eigen SparseLU from now on\n";
          impl_->use_fallback = true;
          x = std::move(y);
        }
      }
    }
  } else {
    Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<double>> gmres;
    gmres.preconditioner().setDroptol(options_.ilut_drop_tolerance);
    gmres.preconditioner().setFillfactor(options_.ilut_fill_factor);
    gmres.set_restart(options_.gmres_restart);
    gmres.setMaxIterations(options_.max_krylov_iterations);
    // Eigen measures the preconditioned residual; aim below the target.
    gmres.setTolerance(0.1 * options_.tolerance);
    gmres.compute(matrix);
    if (gmres.preconditioner().info() != Eigen::Success)
      throw LinearSolveFailure("incomplete LU preconditioner failed");
    x = gmres.solve(rhs);
  }

  if (!x.allFinite()) throw LinearSolveFailure("linear solve produced non-finite values");
  last_residual_ = relative_residual(matrix, x, rhs);
  if (last_residual_ > options_.tolerance) {
    std::ostringstream os;
    os << "KKT solve missed tolerance: relative residual " << last_residual_;
    throw LinearSolveFailure(os.str());
  }
  return x;
}

Vector solve_kkt(const SparseMatrix& matrix, const Vector& rhs, const KktOptions& options) {
  KktSolver solver(options);
  return solver.solve(matrix, rhs);
}

struct SpdSolver::Impl {
  Eigen::SimplicialLLT<ColMatrix> llt;
};

SpdSolver::SpdSolver(const SparseMatrix& matrix) : impl_(std::make_unique<Impl>()) {
  ColMatrix col = matrix;
  col.makeCompressed();
  impl_->llt.compute(col);
  if (impl_->llt.info() != Eigen::Success)
    throw LinearSolveFailure("Cholesky factorization failed (matrix not positive definite)");
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const Vector& rhs) const { return impl_->llt.solve(rhs); }

}  // namespace hmfem
