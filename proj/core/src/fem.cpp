#include "hmfem/fem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <ostream>

#include "hmfem/error.hpp"
#include "hmfem/quadrature.hpp"

namespace hmfem {

namespace {

void require_same_space(const FeFunction& v, const FeFunction& w) {
  if (v.mesh_ptr() != w.mesh_ptr() && &v.mesh() != &w.mesh())
    throw DimensionMismatch("functions live on different meshes");
  if (v.components() != w.components())
    throw DimensionMismatch("functions have different numbers of components");
}

// Physical point of barycentric coordinates `bary` in simplex t.
void map_point(const SimplicialMesh& mesh, std::size_t t, const std::array<double, 4>& bary,
               std::array<double, 3>& x) {
  auto s = mesh.simplex(t);
  x = {0.0, 0.0, 0.0};
  for (int k = 0; k <= mesh.dim(); ++k) {
    auto p = mesh.vertex(s[k]);
    for (int c = 0; c < mesh.dim(); ++c) x[c] += bary[k] * p[c];
  }
}

// (f, phi_z) for every vertex z via the mesh quadrature.
Vector load_vector(const SimplicialMesh& mesh, const ScalarField& f) {
  const auto& rule = simplex_rule(mesh.dim());
  Vector load = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  std::array<double, 3> x{};
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    const double vol = mesh.volume(t);
    auto s = mesh.simplex(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      map_point(mesh, t, rule.points[q], x);
      const double fx = f(std::span<const double>(x.data(), mesh.dim()));
      for (int k = 0; k <= mesh.dim(); ++k) load[s[k]] += vol * rule.weights[q] * fx * rule.points[q][k];
    }
  }
  return load;
}

Vector patch_volumes(const SimplicialMesh& mesh) {
  Vector omega = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    const double vol = mesh.volume(t);
    for (Index z : mesh.simplex(t)) omega[z] += vol;
  }
  return omega;
}

}  // namespace

FeFunction::FeFunction(MeshPtr mesh, int components)
    : FeFunction(mesh, components,
                 Vector::Zero(static_cast<Eigen::Index>(mesh ? mesh->num_vertices() * components : 0))) {}

FeFunction::FeFunction(MeshPtr mesh, int components, Vector coefficients)
    : mesh_(std::move(mesh)), components_(components), coefficients_(std::move(coefficients)) {
  if (!mesh_) throw Error("FeFunction requires a mesh");
  if (components_ < 1) throw DimensionMismatch("FeFunction needs at least one component");
  if (static_cast<std::size_t>(coefficients_.size()) != mesh_->num_vertices() * components_)
    throw DimensionMismatch("coefficient array length must equal #vertices * m");
}

void FeFunction::evaluate(std::size_t t, std::span<const double> bary, std::span<double> out) const {
  auto s = mesh_->simplex(t);
  for (int i = 0; i < components_; ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) v += bary[k] * (*this)(s[k], i);
    out[i] = v;
  }
}

P1Geometry::P1Geometry(const SimplicialMesh& mesh) : dim_(mesh.dim()) {
  const std::size_t ns = mesh.num_simplices();
  volumes_.resize(ns);
  gradients_.resize(ns * (dim_ + 1) * dim_);
  for (std::size_t t = 0; t < ns; ++t) {
    auto s = mesh.simplex(t);
    Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
    auto p0 = mesh.vertex(s[0]);
    for (int k = 1; k <= dim_; ++k) {
      auto pk = mesh.vertex(s[k]);
      for (int c = 0; c < dim_; ++c) jac(c, k - 1) = pk[c] - p0[c];
    }
    volumes_[t] = mesh.volume(t);
    if (!(volumes_[t] > 0.0)) throw MeshError("degenerate simplex (non-positive volume)");
    // Rows of the inverse Jacobian are the gradients of barycentric coordinates 1..d;
    // padding with the identity keeps the 3x3 inverse valid for d = 2.
    const Eigen::Matrix3d jinv = jac.inverse();
    double* g = gradients_.data() + t * (dim_ + 1) * dim_;
    for (int c = 0; c < dim_; ++c) g[c] = 0.0;
    for (int k = 1; k <= dim_; ++k)
      for (int c = 0; c < dim_; ++c) {
        g[k * dim_ + c] = jinv(k - 1, c);
        g[c] -= jinv(k - 1, c);
      }
  }
}

FreeNodeMap::FreeNodeMap(const SimplicialMesh& mesh) : free_index_(mesh.num_vertices(), -1) {
  for (std::size_t z = 0; z < mesh.num_vertices(); ++z) {
    if (mesh.is_boundary(z)) continue;
    free_index_[z] = static_cast<Index>(vertices_.size());
    vertices_.push_back(z);
  }
}

FeFunction nodal_interpolate(const MeshPtr& mesh, const VectorField& f, int m) {
  FeFunction v(mesh, m);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    f(mesh->vertex(z), v.value(z));
    for (double c : v.value(z))
      if (!std::isfinite(c)) throw EvaluationError("interpolated field is not finite at a vertex");
  }
  return v;
}

FeFunction nodal_interpolate(const MeshPtr& mesh, const ScalarField& f) {
  return nodal_interpolate(
      mesh, [&f](std::span<const double> x, std::span<double> out) { out[0] = f(x); }, 1);
}

SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, int m) {
  if (m < 1) throw DimensionMismatch("stiffness needs m >= 1");
  const P1Geometry geo(mesh);
  const int d = mesh.dim();
  const auto nv = static_cast<Index>(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_simplices() * (d + 1) * (d + 1) * m);
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    for (int a = 0; a <= d; ++a) {
      auto ga = geo.gradient(t, a);
      for (int b = 0; b <= d; ++b) {
        auto gb = geo.gradient(t, b);
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += ga[c] * gb[c];
        for (int i = 0; i < m; ++i)
          triplets.emplace_back(i * nv + s[a], i * nv + s[b], geo.volume(t) * dot);
      }
    }
  }
  SparseMatrix A(nv * m, nv * m);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

SparseMatrix assemble_mass(const SimplicialMesh& mesh) {
  const int d = mesh.dim();
  const auto nv = static_cast<Index>(mesh.num_vertices());
  const double scale = 1.0 / ((d + 1) * (d + 2));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_simplices() * (d + 1) * (d + 1));
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    const double vol = mesh.volume(t);
    if (!(vol > 0.0)) throw MeshError("degenerate simplex (non-positive volume)");
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b) triplets.emplace_back(s[a], s[b], vol * scale * (a == b ? 2.0 : 1.0));
  }
  SparseMatrix M(nv, nv);
  M.setFromTriplets(triplets.begin(), triplets.end());
  M.makeCompressed();
  return M;
}

LumpedWeights lumped_weights(const SimplicialMesh& mesh) {
  Vector beta = patch_volumes(mesh) / static_cast<double>(mesh.dim() + 1);
  return {std::move(beta)};
}

double discrete_inner(const FeFunction& v, const FeFunction& w) {
  require_same_space(v, w);
  const auto weights = lumped_weights(v.mesh());
  double sum = 0.0;
  for (std::size_t z = 0; z < v.num_nodes(); ++z) {
    double dot = 0.0;
    for (int i = 0; i < v.components(); ++i) dot += v(z, i) * w(z, i);
    sum += weights.beta[static_cast<Eigen::Index>(z)] * dot;
  }
  return sum;
}

double consistent_l2_inner(const FeFunction& v, const FeFunction& w) {
  require_same_space(v, w);
  const auto& mesh = v.mesh();
  const int d = mesh.dim();
  const double scale = 1.0 / ((d + 1) * (d + 2));
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    double local = 0.0;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b) {
        double dot = 0.0;
        for (int i = 0; i < v.components(); ++i) dot += v(s[a], i) * w(s[b], i);
        local += (a == b ? 2.0 : 1.0) * dot;
      }
    sum += mesh.volume(t) * scale * local;
  }
  return sum;
}

double l2_norm(const FeFunction& v) { return std::sqrt(std::max(0.0, consistent_l2_inner(v, v))); }

double discrete_norm(const FeFunction& v) { return std::sqrt(std::max(0.0, discrete_inner(v, v))); }

double integrate(const SimplicialMesh& mesh, std::size_t t, const ScalarField& f) {
  const auto& rule = simplex_rule(mesh.dim());
  std::array<double, 3> x{};
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    map_point(mesh, t, rule.points[q], x);
    sum += rule.weights[q] * f(std::span<const double>(x.data(), mesh.dim()));
  }
  return mesh.volume(t) * sum;
}

double l2_distance(const FeFunction& v, const ScalarField& f) {
  if (v.components() != 1) throw DimensionMismatch("l2_distance expects a scalar function");
  const auto& mesh = v.mesh();
  const auto& rule = simplex_rule(mesh.dim());
  std::array<double, 3> x{};
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    double local = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      map_point(mesh, t, rule.points[q], x);
      double vh = 0.0;
      v.evaluate(t, rule.points[q], std::span<double>(&vh, 1));
      const double diff = vh - f(std::span<const double>(x.data(), mesh.dim()));
      local += rule.weights[q] * diff * diff;
    }
    sum += mesh.volume(t) * local;
  }
  return std::sqrt(sum);
}

FeFunction clement_interpolate(const MeshPtr& mesh, const ScalarField& alpha, bool dirichlet) {
  Vector patch_integral = Vector::Zero(static_cast<Eigen::Index>(mesh->num_vertices()));
  for (std::size_t t = 0; t < mesh->num_simplices(); ++t) {
    const double integral = integrate(*mesh, t, alpha);
    for (Index z : mesh->simplex(t)) patch_integral[z] += integral;
  }
  Vector values = patch_integral.cwiseQuotient(patch_volumes(*mesh));
  if (dirichlet)
    for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
      if (mesh->is_boundary(z)) values[static_cast<Eigen::Index>(z)] = 0.0;
  return FeFunction(mesh, 1, std::move(values));
}

FeFunction clement_interpolate(const FeFunction& alpha, bool dirichlet) {
  const auto& mesh = alpha.mesh();
  const int m = alpha.components();
  const int n = mesh.dim() + 1;
  FeFunction out(alpha.mesh_ptr(), m);
  const Vector omega = patch_volumes(mesh);
  for (std::size_t t = 0; t < mesh.num_simplices(); ++t) {
    auto s = mesh.simplex(t);
    const double vol = mesh.volume(t);
    for (int i = 0; i < m; ++i) {
      double mean = 0.0;
      for (Index z : s) mean += alpha(z, i);
      mean /= n;
      for (Index z : s) out(z, i) += vol * mean;
    }
  }
  for (std::size_t z = 0; z < mesh.num_vertices(); ++z)
    for (int i = 0; i < m; ++i)
      out(z, i) = (dirichlet && mesh.is_boundary(z)) ? 0.0 : out(z, i) / omega[static_cast<Eigen::Index>(z)];
  return out;
}

FeFunction modified_l2_projection(const MeshPtr& mesh, const ScalarField& v, bool dirichlet) {
  Vector values = load_vector(*mesh, v).cwiseQuotient(lumped_weights(*mesh).beta);
  if (dirichlet)
    for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
      if (mesh->is_boundary(z)) values[static_cast<Eigen::Index>(z)] = 0.0;
  return FeFunction(mesh, 1, std::move(values));
}

FeFunction modified_l2_projection(const FeFunction& v, bool dirichlet) {
  const auto& mesh = v.mesh();
  const SparseMatrix M = assemble_mass(mesh);
  const Vector beta = lumped_weights(mesh).beta;
  const int m = v.components();
  FeFunction out(v.mesh_ptr(), m);
  for (int i = 0; i < m; ++i) {
    Vector component(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t z = 0; z < mesh.num_vertices(); ++z) component[static_cast<Eigen::Index>(z)] = v(z, i);
    const Vector projected = (M * component).cwiseQuotient(beta);
    for (std::size_t z = 0; z < mesh.num_vertices(); ++z)
      out(z, i) = (dirichlet && mesh.is_boundary(z)) ? 0.0 : projected[static_cast<Eigen::Index>(z)];
  }
  return out;
}

void dump_triplets(std::ostream& out, const SparseMatrix& matrix) {
  const auto old_precision = out.precision(17);
  for (int r = 0; r < matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  out.precision(old_precision);
}

}  // namespace hmfem
