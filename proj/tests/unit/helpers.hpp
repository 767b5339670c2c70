#pragma once

#include <cmath>
#include <random>

#include "hmfem/fem.hpp"
#include "hmfem/mesh.hpp"

namespace hmfem::test {

inline MeshPtr mesh_ptr(int dim, int level, const std::optional<PerturbSpec>& perturb = std::nullopt) {
  return std::make_shared<const SimplicialMesh>(build_mesh(dim, level, perturb));
}

/// Nodal values uniform in [-1, 1]; boundary values zeroed with `dirichlet`.
inline FeFunction random_function(const MeshPtr& mesh, int m, std::mt19937_64& rng, bool dirichlet = false) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  FeFunction v(mesh, m);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    for (int i = 0; i < m; ++i) v(z, i) = (dirichlet && mesh->is_boundary(z)) ? 0.0 : unit(rng);
  return v;
}

inline FeFunction product(const FeFunction& v, const FeFunction& w) {
  FeFunction out(v.mesh_ptr(), 1);
  for (std::size_t z = 0; z < v.num_nodes(); ++z) {
    double s = 0;
    for (int i = 0; i < v.components(); ++i) s += v(z, i) * w(z, i);
    out(z) = s;
  }
  return out;
}

/// Centered-difference Jacobian of a map R^d -> R^m at x, step h.
template <class F>
double fd_gradient_squared(const F& f, std::vector<double> x, int m, double h = 1e-5) {
  double sum = 0;
  std::vector<double> up(m), dn(m);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    x[k] = xk + h;
    f(x, up);
    x[k] = xk - h;
    f(x, dn);
    x[k] = xk;
    for (int i = 0; i < m; ++i) {
      const double d = (up[i] - dn[i]) / (2 * h);
      sum += d * d;
    }
  }
  return sum;
}

}  // namespace hmfem::test
