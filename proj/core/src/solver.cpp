#include "hmfem/solver.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

using Clock = std::chrono::steady_clock;

SparseMatrix restrict_to_free(const SparseMatrix& full, const FreeNodeMap& free) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (std::size_t k = 0; k < free.size(); ++k) {
    const auto z = static_cast<int>(free.vertex(k));
    for (SparseMatrix::InnerIterator it(full, z); it; ++it) {
      const Index col = free.free_index(static_cast<std::size_t>(it.col()));
      if (col >= 0) triplets.emplace_back(static_cast<int>(k), col, it.value());
    }
  }
  const auto n = static_cast<int>(free.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

Eigen::VectorXd node_value(const FeFunction& f, std::size_t z) {
  auto v = f.value(z);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

BoundaryData make_boundary_data(const MeshPtr& mesh, const TargetManifold& manifold,
                                VectorField field) {
  FeFunction nodal = nodal_interpolate(mesh, field, manifold.ambient_dim());
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    if (!mesh->is_boundary(z)) continue;
    if (closest_point_residual(manifold, node_value(nodal, z)) > 1e-12)
      throw EvaluationError("boundary data does not take values in the target manifold");
  }
  return {std::move(field), std::move(nodal)};
}

SaddleSystem::SaddleSystem(MeshPtr mesh, ManifoldPtr manifold, BoundaryData boundary,
                           SystemPolicy policy)
    : mesh_(std::move(mesh)), manifold_(std::move(manifold)), boundary_(std::move(boundary)),
      free_(*mesh_), weights_(lumped_weights(*mesh_)) {
  if (boundary_.nodal.components() != manifold_->ambient_dim())
    throw DimensionMismatch("boundary data dimension does not match the target manifold");
  if (&boundary_.nodal.mesh() != mesh_.get()) throw DimensionMismatch("boundary data lives on another mesh");
  if (mesh_->dim() == 3 && !manifold_->is_quadratic() && !policy.allow_nonquadratic_3d)
    throw ConfigError("non-quadratic target manifolds in d=3 require an explicit override");
  stiffness_ = assemble_stiffness(*mesh_, 1);
  stiffness_ff_ = restrict_to_free(stiffness_, free_);
  mass_ff_ = restrict_to_free(assemble_mass(*mesh_), free_);
}

SaddleState SaddleSystem::make_state(FeFunction u, FeFunction lambda) const {
  if (u.components() != m() || lambda.components() != 1)
    throw DimensionMismatch("state components do not match the system");
  for (std::size_t z = 0; z < mesh_->num_vertices(); ++z) {
    if (!mesh_->is_boundary(z)) continue;
    for (int i = 0; i < m(); ++i) u(z, i) = boundary_.nodal(z, i);
    lambda(z) = 0.0;
  }
  return {std::move(u), std::move(lambda)};
}

void SaddleSystem::validate(const SaddleState& state) const {
  if (state.u.components() != m() || state.lambda.components() != 1)
    throw DimensionMismatch("state components do not match the system");
  if (state.u.num_nodes() != mesh_->num_vertices() || state.lambda.num_nodes() != mesh_->num_vertices())
    throw DimensionMismatch("state lives on another mesh");
  for (std::size_t z = 0; z < mesh_->num_vertices(); ++z) {
    if (!mesh_->is_boundary(z)) continue;
    if (state.lambda(z) != 0.0) throw Error("multiplier must vanish at boundary vertices");
    for (int i = 0; i < m(); ++i)
      if (state.u(z, i) != boundary_.nodal(z, i)) throw Error("u does not match the boundary data");
  }
}

Vector SaddleSystem::pack(const SaddleState& state) const {
  const auto nf = free_.size();
  const auto mm = static_cast<std::size_t>(m());
  Vector x(static_cast<Eigen::Index>(num_unknowns()));
  for (std::size_t k = 0; k < nf; ++k) {
    const auto z = free_.vertex(k);
    for (std::size_t i = 0; i < mm; ++i) x[static_cast<Eigen::Index>(k * mm + i)] = state.u(z, static_cast<int>(i));
    x[static_cast<Eigen::Index>(nf * mm + k)] = state.lambda(z);
  }
  return x;
}

SaddleState SaddleSystem::apply_correction(const SaddleState& state, const Vector& correction) const {
  if (static_cast<std::size_t>(correction.size()) != num_unknowns())
    throw DimensionMismatch("correction has wrong length");
  SaddleState next = state;
  const auto nf = free_.size();
  const auto mm = static_cast<std::size_t>(m());
  for (std::size_t k = 0; k < nf; ++k) {
    const auto z = free_.vertex(k);
    for (std::size_t i = 0; i < mm; ++i)
      next.u(z, static_cast<int>(i)) += correction[static_cast<Eigen::Index>(k * mm + i)];
    next.lambda(z) += correction[static_cast<Eigen::Index>(nf * mm + k)];
  }
  return next;
}

double SaddleSystem::correction_norm(const Vector& correction, double multiplier_scale) const {
  const auto nf = static_cast<Eigen::Index>(free_.size());
  const int mm = m();
  double h1 = 0.0;
  for (int i = 0; i < mm; ++i) {
    Vector di(nf);
    for (Eigen::Index k = 0; k < nf; ++k) di[k] = correction[k * mm + i];
    h1 += di.dot(stiffness_ff_ * di);
  }
  const Vector delta = correction.tail(nf);
  const double l2 = delta.dot(mass_ff_ * delta);
  return std::sqrt(std::max(0.0, h1)) + multiplier_scale * std::sqrt(std::max(0.0, l2));
}

Vector assemble_residual(const SaddleSystem& system, const SaddleState& state) {
  const auto& manifold = system.manifold();
  if (state.u.components() != manifold.ambient_dim())
    throw DimensionMismatch("state dimension does not match the target manifold");
  const int m = system.m();
  const auto nv = static_cast<Eigen::Index>(system.mesh().num_vertices());
  const auto nf = system.num_free_nodes();
  const auto nu = system.num_u_unknowns();

  using RowMajorDense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajorDense> u(state.u.coefficients().data(), nv, m);
  const RowMajorDense au = system.stiffness() * u;

  Vector r(static_cast<Eigen::Index>(system.num_unknowns()));
  for (std::size_t k = 0; k < nf; ++k) {
    const auto z = system.free_nodes().vertex(k);
    const auto zi = static_cast<Eigen::Index>(z);
    const Eigen::VectorXd s = u.row(zi).transpose();
    const double beta = system.weights().beta[zi];
    const Eigen::VectorXd dg = manifold.gradient(s);
    for (int i = 0; i < m; ++i)
      r[static_cast<Eigen::Index>(k * m + i)] = au(zi, i) + beta * state.lambda(z) * dg[i];
    r[static_cast<Eigen::Index>(nu + k)] = beta * manifold.value(s);
  }
  return r;
}

SparseMatrix assemble_jacobian(const SaddleSystem& system, const SaddleState& state) {
  const auto& manifold = system.manifold();
  if (state.u.components() != manifold.ambient_dim())
    throw DimensionMismatch("state dimension does not match the target manifold");
  const int m = system.m();
  const auto nf = system.num_free_nodes();
  const auto nu = static_cast<int>(system.num_u_unknowns());
  const auto& a = system.stiffness_free();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()) * m + nf * (m * m + 2 * m));
  for (int row = 0; row < a.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(a, row); it; ++it)
      for (int i = 0; i < m; ++i) triplets.emplace_back(row * m + i, static_cast<int>(it.col()) * m + i, it.value());

  for (std::size_t k = 0; k < nf; ++k) {
    const auto z = system.free_nodes().vertex(k);
    const Eigen::VectorXd s = node_value(state.u, z);
    const double beta = system.weights().beta[static_cast<Eigen::Index>(z)];
    const Eigen::MatrixXd hess = manifold.hessian(s);
    const Eigen::VectorXd dg = manifold.gradient(s);
    const int base = static_cast<int>(k) * m;
    const double scale = beta * state.lambda(z);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (hess(i, j) != 0.0) triplets.emplace_back(base + i, base + j, scale * hess(i, j));
    const int row = nu + static_cast<int>(k);
    for (int i = 0; i < m; ++i) {
      triplets.emplace_back(row, base + i, beta * dg[i]);
      triplets.emplace_back(base + i, row, beta * dg[i]);
    }
  }
  const auto n = static_cast<int>(system.num_unknowns());
  SparseMatrix jac(n, n);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  jac.makeCompressed();
  return jac;
}

SparseMatrix assemble_constraint_block(const SaddleSystem& system, const SaddleState& state) {
  const int m = system.m();
  const auto nf = system.num_free_nodes();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nf * m);
  for (std::size_t k = 0; k < nf; ++k) {
    const auto z = system.free_nodes().vertex(k);
    const double beta = system.weights().beta[static_cast<Eigen::Index>(z)];
    const Eigen::VectorXd dg = system.manifold().gradient(node_value(state.u, z));
    for (int i = 0; i < m; ++i) triplets.emplace_back(static_cast<int>(k), static_cast<int>(k) * m + i, beta * dg[i]);
  }
  SparseMatrix b(static_cast<int>(nf), static_cast<int>(nf) * m);
  b.setFromTriplets(triplets.begin(), triplets.end());
  b.makeCompressed();
  return b;
}

double residual_euclidean_norm(const SaddleSystem& system, const SaddleState& state) {
  return assemble_residual(system, state).norm();
}

double residual_dual_norm(const SaddleSystem& system, const SaddleState& state) {
  const Vector r = assemble_residual(system, state);
  const int m = system.m();
  const auto nf = static_cast<Eigen::Index>(system.num_free_nodes());
  const SpdSolver stiffness(system.stiffness_free());
  // sup_v F[v] / |grad v| = sqrt(r_u^T K^-1 r_u) with K = A (x) I_m.
  double u_part = 0.0;
  for (int i = 0; i < m; ++i) {
    Vector ri(nf);
    for (Eigen::Index k = 0; k < nf; ++k) ri[k] = r[k * m + i];
    u_part += ri.dot(stiffness.solve(ri));
  }
  // sup_mu F[mu] / |mu|_{H^-1_h} = sqrt(r^T M^-1 A M^-1 r), since |mu|^2_{H^-1_h} = mu^T M A^-1 M mu.
  const Vector r_mu = r.tail(nf);
  double mu_part = 0.0;
  if (r_mu.norm() > 0.0) {
    const SpdSolver mass(system.mass_free());
    const Vector y = mass.solve(r_mu);
    mu_part = y.dot(system.stiffness_free() * y);
  }
  return std::max(std::sqrt(std::max(0.0, u_part)), std::sqrt(std::max(0.0, mu_part)));
}

double infsup_diagnostic(const SaddleSystem& system, const SaddleState& state,
                         std::size_t max_free_nodes) {
  const auto nf = static_cast<Eigen::Index>(system.num_free_nodes());
  if (system.num_free_nodes() > max_free_nodes)
    throw Error("inf-sup diagnostic limited to " + std::to_string(max_free_nodes) + " interior nodes");
  const int m = system.m();
  const Eigen::MatrixXd a = Eigen::MatrixXd(system.stiffness_free());
  const Eigen::MatrixXd mass = Eigen::MatrixXd(system.mass_free());
  const Eigen::LLT<Eigen::MatrixXd> a_llt(a);

  // B = [B_1 ... B_m] with diagonal blocks B_i = diag(beta_z dg_i(u_z)).
  Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(nf, nf);
  const SparseMatrix b = assemble_constraint_block(system, state);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd diag(nf);
    for (Eigen::Index k = 0; k < nf; ++k) diag[k] = b.coeff(k, k * m + i);
    const Eigen::MatrixXd bi = diag.asDiagonal();
    schur += bi * a_llt.solve(bi);
  }
  const Eigen::MatrixXd hm1_gram = mass * a_llt.solve(mass);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur, hm1_gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("generalized eigenvalue computation failed");
  return std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
}

std::string to_string(NewtonStatus status) {
  switch (status) {
    case NewtonStatus::converged:
      return "converged";
    case NewtonStatus::no_convergence:
      return "no_convergence";
    case NewtonStatus::linear_solve_failure:
      return "linear_solve_failure";
    case NewtonStatus::diverged:
      return "diverged";
  }
  return "unknown";
}

NewtonResult newton_solve(const SaddleSystem& system, const SaddleState& initial,
                          const NewtonOptions& options) {
  if (!(options.eps_stop > 0.0)) throw ConfigError("eps_stop must be positive");
  if (options.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  system.validate(initial);

  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  NewtonResult result{initial, {}};
  NewtonTrace& trace = result.trace;
  KktSolver kkt(options.kkt);
  trace.status = NewtonStatus::no_convergence;

  for (int k = 1; k <= options.max_iter; ++k) {
    const Vector residual = assemble_residual(system, result.state);
    const double res_norm = residual.norm();
    if (!std::isfinite(res_norm)) {
      trace.status = NewtonStatus::diverged;
      trace.message = "non-finite residual at step " + std::to_string(k);
      break;
    }
    Vector correction;
    try {
      correction = kkt.solve(assemble_jacobian(system, result.state), -residual);
    } catch (const LinearSolveFailure& e) {
      trace.status = NewtonStatus::linear_solve_failure;
      trace.message = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
    result.state = system.apply_correction(result.state, correction);
    const double corr = system.correction_norm(correction, options.multiplier_norm_scale);
    trace.steps.push_back({k, corr, res_norm, elapsed()});
    if (!std::isfinite(corr)) {
      trace.status = NewtonStatus::diverged;
      trace.message = "non-finite correction at step " + std::to_string(k);
      break;
    }
    if (corr <= options.eps_stop) {
      trace.status = NewtonStatus::converged;
      break;
    }
  }
  if (trace.status == NewtonStatus::no_convergence)
    trace.message = "stopping criterion not met within " + std::to_string(options.max_iter) + " iterations";
  trace.final_residual = residual_euclidean_norm(system, result.state);
  trace.total_seconds = elapsed();
  return result;
}

void write_trace_csv(std::ostream& out, const NewtonTrace& trace) {
  const auto old_precision = out.precision(17);
  out << "step,correction_norm,residual_norm,seconds\n";
  for (const auto& s : trace.steps)
    out << s.step << ',' << s.correction_norm << ',' << s.residual_norm << ',' << s.seconds << '\n';
  out.precision(old_precision);
}

}  // namespace hmfem
