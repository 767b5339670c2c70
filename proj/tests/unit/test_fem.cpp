#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "estimate_constants.hpp"
#include "hmfem/analysis.hpp"
#include "hmfem/error.hpp"
#include "hmfem/examples.hpp"
#include "hmfem/fem.hpp"

using namespace hmfem;
using test::mesh_ptr;
using test::random_function;

namespace {

double sin_x1(std::span<const double> x) { return std::sin(2 * std::numbers::pi * x[0]); }

}  // namespace

TEST_CASE("FeFunction storage") {
  const MeshPtr mesh = mesh_ptr(2, 1);
  FeFunction v(mesh, 3);
  CHECK(v.coefficients().size() == 27);
  CHECK_THROWS_AS(FeFunction(mesh, 2, Vector::Zero(5)), DimensionMismatch);
  CHECK_THROWS_AS(FeFunction(mesh, 0), DimensionMismatch);

  std::mt19937_64 rng(1);
  const FeFunction w = random_function(mesh, 2, rng);
  // Evaluation at a vertex of a simplex reproduces the nodal value.
  for (std::size_t t = 0; t < mesh->num_simplices(); ++t)
    for (int k = 0; k < 3; ++k) {
      double bary[3] = {0, 0, 0};
      bary[k] = 1;
      double out[2];
      w.evaluate(t, bary, out);
      const auto z = static_cast<std::size_t>(mesh->simplex(t)[k]);
      CHECK(out[0] == w(z, 0));
      CHECK(out[1] == w(z, 1));
    }
}

TEST_CASE("nodal interpolation") {
  const MeshPtr mesh = mesh_ptr(2, 3);
  const FeFunction c = nodal_interpolate(mesh, [](std::span<const double>) { return 2.5; });
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) CHECK(c(z) == 2.5);

  const ExampleFields ex = exact_solution(ExampleId::inv_stereo);
  const FeFunction u = nodal_interpolate(mesh, ex.u, 3);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    const auto x = mesh->vertex(z);
    if (x[0] == 0.0 && x[1] == 0.0) {
      CHECK(u(z, 0) == 0.0);
      CHECK(u(z, 1) == 0.0);
      CHECK(u(z, 2) == 1.0);
    }
  }

  CHECK_THROWS_AS(nodal_interpolate(mesh, [](std::span<const double>) { return std::nan(""); }), EvaluationError);

  // |grad(u - I_h u)| decays at rate 1; the oracle is the mesh quadrature of
  // the exact gradient, computed here by finite differences per simplex.
  std::vector<double> errors, h;
  for (int level = 2; level <= 6; ++level) {
    const MeshPtr m = mesh_ptr(2, level);
    const FeFunction ih = nodal_interpolate(m, ex.u, 3);
    const P1Geometry geo(*m);
    double sum = 0;
    for (std::size_t t = 0; t < m->num_simplices(); ++t) {
      double grad[3][2] = {};
      for (int k = 0; k < 3; ++k) {
        const auto z = static_cast<std::size_t>(m->simplex(t)[k]);
        const auto g = geo.gradient(t, k);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 2; ++j) grad[i][j] += ih(z, i) * g[j];
      }
      sum += integrate(*m, t, [&](std::span<const double> x) {
        double s = 0;
        const double step = 1e-6;
        for (int j = 0; j < 2; ++j) {
          std::array<double, 2> xp{x[0], x[1]}, xm{x[0], x[1]};
          xp[j] += step;
          xm[j] -= step;
          std::array<double, 3> up{}, um{};
          ex.u(xp, up);
          ex.u(xm, um);
          for (int i = 0; i < 3; ++i) {
            const double d = (up[i] - um[i]) / (2 * step) - grad[i][j];
            s += d * d;
          }
        }
        return s;
      });
    }
    errors.push_back(std::sqrt(sum));
    h.push_back(m->h_max());
  }
  const auto rates = eoc(errors, h);
  CHECK(rates.back() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("stiffness matrix") {
  const MeshPtr mesh = mesh_ptr(2, 2);
  const SparseMatrix a = assemble_stiffness(*mesh);
  const SparseMatrix at = a.transpose();
  CHECK((a - at).norm() == 0.0);
  const Vector ones = Vector::Ones(a.cols());
  CHECK((a * ones).lpNorm<Eigen::Infinity>() < 1e-13);
  // Five-point stencil at interior vertices of the structured mesh.
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    if (!mesh->is_boundary(z)) CHECK(a.coeff(z, z) == doctest::Approx(4.0));

  const SparseMatrix a3 = assemble_stiffness(*mesh, 3);
  CHECK(a3.rows() == 3 * a.rows());
  const auto n = static_cast<int>(mesh->num_vertices());
  CHECK(a3.coeff(n + 6, n + 6) == a.coeff(6, 6));
  CHECK(a3.coeff(6, n + 6) == 0.0);
  CHECK((a3 * Vector::Ones(a3.cols())).lpNorm<Eigen::Infinity>() < 1e-13);

  // Deterministic assembly.
  const SparseMatrix again = assemble_stiffness(*mesh);
  std::ostringstream d1, d2;
  dump_triplets(d1, a);
  dump_triplets(d2, again);
  CHECK(d1.str() == d2.str());
  CHECK(d1.str().find("0 0 ") == 0);

  // Sorted column indices, no duplicates: compressed row storage.
  CHECK(a.isCompressed());
  for (int r = 0; r < a.outerSize(); ++r) {
    int prev = -1;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      CHECK(it.col() > prev);
      prev = static_cast<int>(it.col());
    }
  }
}

TEST_CASE("lumped weights") {
  for (int level = 1; level <= 4; ++level) {
    const MeshPtr mesh = mesh_ptr(2, level);
    const LumpedWeights w = lumped_weights(*mesh);
    CHECK(w.beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.beta.minCoeff() > 0.0);
    const double cell = std::ldexp(1.0, -level);
    for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
      if (!mesh->is_boundary(z)) CHECK(w.beta[static_cast<Eigen::Index>(z)] == doctest::Approx(cell * cell));
  }
  const MeshPtr mesh3 = mesh_ptr(3, 2, PerturbSpec{0.1, 5});
  CHECK(lumped_weights(*mesh3).beta.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inner products") {
  std::mt19937_64 rng(11);
  for (int dim : {2, 3}) {
    const MeshPtr mesh = mesh_ptr(dim, dim == 2 ? 3 : 2, PerturbSpec{0.1, 2});
    FeFunction one(mesh, 1);
    one.coefficients().setOnes();
    CHECK(discrete_inner(one, one) == doctest::Approx(1.0));
    CHECK(consistent_l2_inner(one, one) == doctest::Approx(1.0));

    for (int trial = 0; trial < 20; ++trial) {
      const FeFunction v = random_function(mesh, 2, rng);
      const FeFunction w = random_function(mesh, 2, rng);
      CHECK(discrete_inner(v, w) == doctest::Approx(discrete_inner(w, v)));
      FeFunction v3 = v;
      v3.coefficients() *= 3.0;
      CHECK(consistent_l2_inner(v3, w) == doctest::Approx(3.0 * consistent_l2_inner(v, w)));
      // Norm equivalence, with the convex-square direction ||v|| <= ||v||_h.
      const double l2 = consistent_l2_inner(v, v);
      const double lumped = discrete_inner(v, v);
      CHECK(l2 <= lumped * (1 + 1e-12));
      CHECK(lumped <= (dim + 2) * l2);
      // (v, w)_h is the exact integral of I_h(v . w).
      CHECK(discrete_inner(v, w) == doctest::Approx(consistent_l2_inner(test::product(v, w), one)));
    }
  }
  const MeshPtr a = mesh_ptr(2, 1);
  const MeshPtr b = mesh_ptr(2, 1);
  CHECK_THROWS_AS(discrete_inner(FeFunction(a, 1), FeFunction(b, 1)), DimensionMismatch);
  CHECK_THROWS_AS(discrete_inner(FeFunction(a, 1), FeFunction(a, 2)), DimensionMismatch);
}

TEST_CASE("quadrature control has a level-independent constant") {
  std::mt19937_64 rng(3);
  std::vector<double> constants;
  for (int level = 2; level <= 6; ++level) constants.push_back(test::quadrature_control_constant(build_mesh(2, level), 10, rng));
  const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
  CHECK(*hi / *lo < 3.0);
  CHECK(*lo > 0.0);
}

TEST_CASE("Clement interpolation") {
  const MeshPtr mesh = mesh_ptr(2, 3);
  const FeFunction c = clement_interpolate(mesh, [](std::span<const double>) { return -1.5; }, false);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) CHECK(c(z) == doctest::Approx(-1.5));
  const FeFunction d = clement_interpolate(mesh, [](std::span<const double>) { return -1.5; }, true);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    CHECK(d(z) == (mesh->is_boundary(z) ? 0.0 : doctest::Approx(-1.5)));

  // Linearity on discrete input.
  std::mt19937_64 rng(5);
  const FeFunction a = random_function(mesh, 1, rng);
  const FeFunction b = random_function(mesh, 1, rng);
  FeFunction sum = a;
  sum.coefficients() += 2.0 * b.coefficients();
  const Vector lhs = clement_interpolate(sum, false).coefficients();
  const Vector rhs = clement_interpolate(a, false).coefficients() + 2.0 * clement_interpolate(b, false).coefficients();
  CHECK((lhs - rhs).norm() < 1e-12);

  // ||alpha - J_h alpha|| ~ h, L2 stability bounded across levels.
  std::vector<double> err, h, stability;
  for (int level = 2; level <= 6; ++level) {
    const MeshPtr m = mesh_ptr(2, level);
    const FeFunction j = clement_interpolate(m, sin_x1, false);
    err.push_back(l2_distance(j, sin_x1));
    h.push_back(m->h_max());
    stability.push_back(l2_norm(j) / std::sqrt(0.5));
  }
  CHECK(eoc(err, h).back() >= 0.95);
  for (double s : stability) CHECK(s < 1.5);
}

TEST_CASE("modified L2 projection") {
  const MeshPtr mesh = mesh_ptr(2, 2);
  const FeFunction zero = modified_l2_projection(mesh, [](std::span<const double>) { return 0.0; }, true);
  CHECK(zero.coefficients().norm() == 0.0);

  std::mt19937_64 rng(9);
  const FeFunction a = random_function(mesh, 1, rng);
  const FeFunction b = random_function(mesh, 1, rng);
  FeFunction comb = a;
  comb.coefficients() = 2.0 * a.coefficients() - b.coefficients();
  const Vector lin = 2.0 * modified_l2_projection(a, true).coefficients() - modified_l2_projection(b, true).coefficients();
  CHECK((modified_l2_projection(comb, true).coefficients() - lin).norm() < 1e-12);

  // Defining relation (P v, phi_z)_h = (v, phi_z) at free nodes.
  const FeFunction p = modified_l2_projection(a, true);
  const LumpedWeights w = lumped_weights(*mesh);
  const SparseMatrix mass = assemble_mass(*mesh);
  const Vector mv = mass * a.coefficients();
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    const auto k = static_cast<Eigen::Index>(z);
    if (mesh->is_boundary(z))
      CHECK(p(z) == 0.0);
    else
      CHECK(w.beta[k] * p(z) == doctest::Approx(mv[k]));
  }

  // |grad P v| + h^-1 |P v - v| <= c |grad v| with c bounded across levels.
  std::vector<double> constants;
  for (int level = 2; level <= 6; ++level) constants.push_back(test::projection_stability_constant(mesh_ptr(2, level)));
  const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
  CHECK(*hi / *lo < 3.0);
}
