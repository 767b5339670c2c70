#include "hmfem/analysis.hpp"

#include <cmath>
#include <ostream>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

SparseMatrix restrict_to_free(const SparseMatrix& full, const FreeNodeMap& free) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < free.size(); ++k)
    for (SparseMatrix::InnerIterator it(full, static_cast<int>(free.vertex(k))); it; ++it) {
      const Index col = free.free_index(static_cast<std::size_t>(it.col()));
      if (col >= 0) triplets.emplace_back(static_cast<int>(k), col, it.value());
    }
  const auto n = static_cast<int>(free.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

}  // namespace

double h1_seminorm(const FeFunction& v) {
  const auto& mesh = v.mesh();
  const P1Geometry geo(mesh);
  const int d = mesh.dim();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    for (int i = 0; i < v.components(); ++i) {
      double grad[3] = {0.0, 0.0, 0.0};
      for (int k = 0; k <= d; ++k) {
        auto g = geo.gradient(t, k);
        for (int c = 0; c < d; ++c) grad[c] += v(s[k], i) * g[c];
      }
      double g2 = 0.0;
      for (int c = 0; c < d; ++c) g2 += grad[c] * grad[c];
      sum += geo.volume(t) * g2;
    }
  }
  return std::sqrt(sum);
}

double dirichlet_energy(const FeFunction& v) {
  const double n = h1_seminorm(v);
  return 0.5 * n * n;
}

InverseLaplacian::InverseLaplacian(MeshPtr mesh, DualPairing pairing)
    : mesh_(std::move(mesh)), pairing_(pairing), free_(*mesh_) {
  if (free_.size() == 0) throw Error("mesh has no interior vertices");
  stiffness_ff_ = restrict_to_free(assemble_stiffness(*mesh_, 1), free_);
  if (pairing == DualPairing::consistent) {
    mass_ff_ = restrict_to_free(assemble_mass(*mesh_), free_);
  } else {
    const LumpedWeights w = lumped_weights(*mesh_);
    const auto n = static_cast<int>(free_.size());
    mass_ff_.resize(n, n);
    mass_ff_.reserve(Eigen::VectorXi::Constant(n, 1));
    for (int k = 0; k < n; ++k) mass_ff_.insert(k, k) = w.beta[free_.vertex(static_cast<std::size_t>(k))];
    mass_ff_.makeCompressed();
  }
  solver_ = std::make_unique<SpdSolver>(stiffness_ff_);
}

Vector InverseLaplacian::solve_interior(const Vector& mu_interior) const {
  return solver_->solve(mass_ff_ * mu_interior);
}

double InverseLaplacian::hm1_norm(const FeFunction& mu) const {
  if (mu.components() != 1) throw DimensionMismatch("H^-1 norm expects a scalar function");
  if (mu.num_nodes() != mesh_->num_vertices()) throw DimensionMismatch("function lives on another mesh");
  Vector interior(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t z = 0; z < mesh_->num_vertices(); ++z) {
    const Index k = free_.free_index(z);
    if (k >= 0)
      interior[k] = mu(z);
    else if (mu(z) != 0.0)
      throw Error("H^-1 norm requires a function vanishing on the boundary");
  }
  const Vector w = solve_interior(interior);
  // |grad w|^2 = w^T A w = w^T M mu.
  return std::sqrt(std::max(0.0, w.dot(stiffness_ff_ * w)));
}

double hm1_norm(const FeFunction& mu, DualPairing pairing) {
  return InverseLaplacian(mu.mesh_ptr(), pairing).hm1_norm(mu);
}

ErrorRecord error_X(const FeFunction& u_h, const FeFunction& lambda_h, const VectorField& exact_u,
                    const ScalarField& exact_lambda, const InverseLaplacian* inverse_laplacian) {
  const auto& mesh_ptr = u_h.mesh_ptr();
  const auto& mesh = *mesh_ptr;
  if (lambda_h.components() != 1) throw DimensionMismatch("multiplier must be scalar");

  FeFunction u_err = nodal_interpolate(mesh_ptr, exact_u, u_h.components());
  u_err.coefficients() = u_h.coefficients() - u_err.coefficients();

  FeFunction lambda_err = nodal_interpolate(mesh_ptr, exact_lambda);
  lambda_err.coefficients() = lambda_h.coefficients() - lambda_err.coefficients();
  FeFunction lambda_err_d = lambda_err;
  for (std::size_t z = 0; z < mesh.num_vertices(); ++z)
    if (mesh.is_boundary(z)) lambda_err_d(z) = lambda_h(z);

  std::unique_ptr<InverseLaplacian> own;
  if (!inverse_laplacian) {
    own = std::make_unique<InverseLaplacian>(mesh_ptr);
    inverse_laplacian = own.get();
  }

  ErrorRecord rec;
  rec.level = mesh.level();
  rec.n_vertices = mesh.num_vertices();
  rec.h = mesh.h_max();
  rec.h_max = mesh.h_max();
  rec.e_u_h1 = h1_seminorm(u_err);
  rec.e_lambda_l2 = discrete_norm(lambda_err);
  rec.e_lambda_l2_interior = l2_norm(lambda_err_d);
  rec.e_lambda_hm1 = inverse_laplacian->hm1_norm(lambda_err_d);
  rec.e_X = rec.e_u_h1 + rec.e_lambda_hm1;
  return rec;
}

std::vector<double> eoc(std::span<const double> values, std::span<const double> h) {
  if (values.size() != h.size()) throw DimensionMismatch("eoc needs equally long sequences");
  if (values.size() < 2) throw Error("eoc needs at least two values");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] > 0.0) || !(h[i] > 0.0)) throw Error("eoc needs strictly positive values and mesh sizes");
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 1; i < values.size(); ++i)
    out[i] = std::log(values[i] / values[i - 1]) / std::log(h[i] / h[i - 1]);
  return out;
}

void fill_eoc(std::vector<ErrorRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (i == 0) {
      r.eoc_X = r.eoc_lambda_l2 = r.eoc_lambda_hm1 = 0.0;
      continue;
    }
    const auto& p = records[i - 1];
    auto slope = [&](double now, double before) {
      if (!(now > 0.0) || !(before > 0.0)) return 0.0;
      return std::log(now / before) / std::log(r.h / p.h);
    };
    r.eoc_X = slope(r.e_X, p.e_X);
    r.eoc_lambda_l2 = slope(r.e_lambda_l2, p.e_lambda_l2);
    r.eoc_lambda_hm1 = slope(r.e_lambda_hm1, p.e_lambda_hm1);
  }
}

void write_error_csv(std::ostream& out, const std::vector<ErrorRecord>& records) {
  const auto old_precision = out.precision(17);
  out << "level,n_vertices,e_X,eoc_lambda_l2,eoc_lambda_hm1,eoc_e_X\n";
  for (const auto& r : records)
    out << r.level << ',' << r.n_vertices << ',' << r.e_X << ',' << r.eoc_lambda_l2 << ','
        << r.eoc_lambda_hm1 << ',' << r.eoc_X << '\n';
  out.precision(old_precision);
}

}  // namespace hmfem
