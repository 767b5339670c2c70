#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "hmfem/analysis.hpp"
#include "hmfem/error.hpp"
#include "hmfem/examples.hpp"

using namespace hmfem;
using test::mesh_ptr;
using test::random_function;

namespace {

// Composite Gauss-Legendre (3 points per cell, 200 x 200 cells) of
// 8 / (1 + |x|^2)^2 over the unit square centered at 0.
double inv_stereo_dirichlet_integral() {
  const double nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double weights[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  const int cells = 200;
  const double w = 1.0 / cells;
  double sum = 0;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double x = -0.5 + (i + 0.5 + 0.5 * nodes[a]) * w;
          const double y = -0.5 + (j + 0.5 + 0.5 * nodes[b]) * w;
          const double r2 = x * x + y * y;
          sum += weights[a] * weights[b] * 0.25 * w * w * 8.0 / ((1 + r2) * (1 + r2));
        }
  return sum;
}

}  // namespace

TEST_CASE("H1 seminorm") {
  const MeshPtr mesh = mesh_ptr(2, 3, PerturbSpec{0.1, 1});
  const FeFunction c = nodal_interpolate(mesh, [](std::span<const double>) { return 3.0; });
  CHECK(h1_seminorm(c) < 1e-13);
  const FeFunction x1 = nodal_interpolate(mesh, [](std::span<const double> x) { return x[0]; });
  CHECK(h1_seminorm(x1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dirichlet_energy(x1) == doctest::Approx(0.5).epsilon(1e-12));

  const double limit = std::sqrt(inv_stereo_dirichlet_integral());
  const ExampleFields ex = exact_solution(ExampleId::inv_stereo);
  double prev_gap = 1e300;
  for (int level = 3; level <= 7; ++level) {
    const double gap = std::abs(h1_seminorm(nodal_interpolate(mesh_ptr(2, level), ex.u, 3)) - limit);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3 * limit);
}

TEST_CASE("discrete H^-1 norm") {
  const MeshPtr mesh = mesh_ptr(2, 3);
  FeFunction zero(mesh, 1);
  CHECK(hm1_norm(zero) == 0.0);

  std::mt19937_64 rng(2);
  const FeFunction mu = random_function(mesh, 1, rng, true);
  FeFunction twice = mu;
  twice.coefficients() *= 2.0;
  for (DualPairing pairing : {DualPairing::lumped, DualPairing::consistent})
    CHECK(hm1_norm(twice, pairing) == doctest::Approx(2.0 * hm1_norm(mu, pairing)));

  const FeFunction not_zero_on_boundary = random_function(mesh, 1, rng, false);
  CHECK_THROWS_AS(hm1_norm(not_zero_on_boundary), Error);

  SUBCASE("single interior node, solved by hand") {
    // Level 1: A_00 = 4, beta_0 = 1/4, consistent M_00 = 1/8. With mu = phi_0,
    // w = c phi_0, 4 c = rhs, |grad w| = 2 c.
    const MeshPtr m1 = mesh_ptr(2, 1);
    FeFunction phi0(m1, 1);
    for (std::size_t z = 0; z < m1->num_vertices(); ++z)
      if (!m1->is_boundary(z)) phi0(z) = 1.0;
    CHECK(hm1_norm(phi0, DualPairing::lumped) == doctest::Approx(2.0 * 0.25 / 4));
    CHECK(hm1_norm(phi0, DualPairing::consistent) == doctest::Approx(2.0 * 0.125 / 4));
  }

  SUBCASE("Poincare direction and inverse estimate with level-stable constants") {
    std::vector<double> poincare, inverse;
    for (int level = 2; level <= 6; ++level) {
      const MeshPtr m = mesh_ptr(2, level);
      const InverseLaplacian inv(m);
      double worst_p = 0, worst_i = 0;
      for (int trial = 0; trial < 5; ++trial) {
        const FeFunction v = random_function(m, 1, rng, true);
        const double h_norm = inv.hm1_norm(v);
        worst_p = std::max(worst_p, h_norm / l2_norm(v));
        worst_i = std::max(worst_i, m->h_max() * l2_norm(v) / h_norm);
      }
      poincare.push_back(worst_p);
      inverse.push_back(worst_i);
    }
    for (double c : poincare) CHECK(c <= 1.0);
    const auto [lo, hi] = std::minmax_element(inverse.begin(), inverse.end());
    CHECK(*hi / *lo < 3.0);
  }
}

TEST_CASE("error_X") {
  const MeshPtr mesh = mesh_ptr(2, 3);
  const ExampleFields ex = exact_solution(ExampleId::inv_stereo);
  const FeFunction u = nodal_interpolate(mesh, ex.u, 3);
  FeFunction lambda = nodal_interpolate(mesh, ex.lambda);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    if (mesh->is_boundary(z)) lambda(z) = 0.0;

  const ErrorRecord exact = error_X(u, lambda, ex.u, ex.lambda);
  CHECK(exact.e_u_h1 == 0.0);
  CHECK(exact.e_lambda_hm1 == 0.0);
  CHECK(exact.e_lambda_l2_interior == 0.0);
  CHECK(exact.e_X == 0.0);
  CHECK(exact.n_vertices == 81);
  // The lumped L2 error keeps the boundary values of the exact multiplier.
  FeFunction boundary_part(mesh, 1);
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    if (mesh->is_boundary(z)) {
      std::array<double, 2> x{mesh->vertex(z)[0], mesh->vertex(z)[1]};
      boundary_part(z) = ex.lambda(x);
    }
  CHECK(exact.e_lambda_l2 == doctest::Approx(discrete_norm(boundary_part)));

  FeFunction off = u;
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z)
    if (!mesh->is_boundary(z)) off(z, 0) += 1e-3;
  const ErrorRecord rec = error_X(off, lambda, ex.u, ex.lambda);
  CHECK(rec.e_u_h1 > 0.0);
  CHECK(rec.e_X == doctest::Approx(rec.e_u_h1 + rec.e_lambda_hm1));
}

TEST_CASE("eoc") {
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> halves, quarters, cubic;
  for (double x : h) {
    halves.push_back(x);
    quarters.push_back(x * x);
    cubic.push_back(std::pow(x, 3.0));
  }
  const auto r1 = eoc(halves, h);
  CHECK(r1[0] == 0.0);
  CHECK(r1[3] == doctest::Approx(1.0));
  CHECK(eoc(quarters, h)[2] == doctest::Approx(2.0));
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(std::abs(eoc(cubic, h)[k] - 3.0) < 1e-12);

  // Published level-3 value.
  const std::vector<double> table{0.0663180364347164, 0.01725969320191879};
  const std::vector<double> hh{0.5, 0.25};
  CHECK(eoc(table, hh)[1] == doctest::Approx(1.9419944714450068).epsilon(1e-6));

  CHECK_THROWS_AS(eoc(std::vector<double>{1.0, 0.0}, hh), Error);
  CHECK_THROWS_AS(eoc(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(eoc(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("error CSV layout") {
  std::vector<ErrorRecord> records(2);
  records[0].level = 1;
  records[0].n_vertices = 9;
  records[0].e_X = 0.2;
  records[0].h = 0.5;
  records[0].e_lambda_l2 = records[0].e_lambda_hm1 = 1;
  records[1].level = 2;
  records[1].n_vertices = 25;
  records[1].e_X = 0.05;
  records[1].h = 0.25;
  records[1].e_lambda_l2 = records[1].e_lambda_hm1 = 0.5;
  fill_eoc(records);
  CHECK(records[1].eoc_X == doctest::Approx(2.0));
  std::ostringstream out;
  write_error_csv(out, records);
  std::istringstream lines(out.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "level,n_vertices,e_X,eoc_lambda_l2,eoc_lambda_hm1,eoc_e_X");
  CHECK(first.rfind("1,9,0.2", 0) == 0);
}
