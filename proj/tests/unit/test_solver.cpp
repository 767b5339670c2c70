#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "hmfem/error.hpp"
#include "hmfem/examples.hpp"
#include "hmfem/solver.hpp"

using namespace hmfem;
using test::mesh_ptr;

namespace {

struct Problem {
  MeshPtr mesh;
  ManifoldPtr manifold;
  SaddleSystem system;
  SaddleState start;
};

Problem make_problem(ExampleId id, int level, ManifoldPtr manifold = nullptr, double rho = 0.0) {
  const int dim = id == ExampleId::radial ? 3 : 2;
  MeshPtr mesh = mesh_ptr(dim, level);
  if (!manifold) manifold = std::make_shared<const TargetManifold>(default_manifold(id));
  SaddleSystem system = make_example_system(id, mesh, manifold);
  SaddleState start = perturbed_start(system, id, 10.0, rho);
  return {mesh, manifold, std::move(system), std::move(start)};
}

Vector random_direction(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector d(static_cast<Eigen::Index>(n));
  for (auto& c : d) c = normal(rng);
  return d / d.norm();
}

// Central differences of the residual against J d, worst relative error.
double fd_jacobian_error(const SaddleSystem& system, const SaddleState& state, int directions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const SparseMatrix jac = assemble_jacobian(system, state);
  const double t = 1e-6;
  double worst = 0;
  for (int k = 0; k < directions; ++k) {
    const Vector d = random_direction(system.num_unknowns(), rng);
    const Vector fd = (assemble_residual(system, system.apply_correction(state, t * d)) -
                       assemble_residual(system, system.apply_correction(state, -t * d))) /
                      (2 * t);
    const Vector jd = jac * d;
    worst = std::max(worst, (fd - jd).norm() / jd.norm());
  }
  return worst;
}

ManifoldPtr tall_ellipsoid() { return std::make_shared<const TargetManifold>(ellipsoid(Eigen::VectorXd{{1.0, 1.0, 2.0}})); }

}  // namespace

TEST_CASE("state invariants") {
  const Problem p = make_problem(ExampleId::inv_stereo, 2, nullptr, 0.3);
  CHECK_NOTHROW(p.system.validate(p.start));
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z)
    if (p.mesh->is_boundary(z)) {
      CHECK(p.start.lambda(z) == 0.0);
      for (int i = 0; i < 3; ++i) CHECK(p.start.u(z, i) == p.system.boundary().nodal(z, i));
    }
  SaddleState bad = p.start;
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z)
    if (p.mesh->is_boundary(z)) {
      bad.lambda(z) = 1.0;
      break;
    }
  CHECK_THROWS_AS(p.system.validate(bad), Error);

  // Boundary data off the target is rejected.
  const MeshPtr mesh = mesh_ptr(2, 1);
  CHECK_THROWS_AS(make_boundary_data(mesh, sphere(3),
                                     [](std::span<const double>, std::span<double> out) {
                                       out[0] = 2.0;
                                       out[1] = out[2] = 0.0;
                                     }),
                  EvaluationError);
}

TEST_CASE("residual block structure") {
  const Problem p = make_problem(ExampleId::inv_stereo, 3, nullptr, 0.1);
  // Normalize u nodewise: constraint block vanishes, u-block does not.
  SaddleState unit = p.start;
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
    Eigen::Map<Eigen::Vector3d> v(unit.u.value(z).data());
    v.normalize();
  }
  const Vector r = assemble_residual(p.system, p.system.make_state(unit.u, unit.lambda));
  const auto nu = static_cast<Eigen::Index>(p.system.num_u_unknowns());
  CHECK(r.tail(r.size() - nu).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK(r.head(nu).norm() > 0.0);
  CHECK(residual_euclidean_norm(p.system, unit) == doctest::Approx(r.norm()));

  // Constraint rows read beta_z g(u(z)).
  const Vector r0 = assemble_residual(p.system, p.start);
  for (std::size_t k = 0; k < p.system.num_free_nodes(); ++k) {
    const std::size_t z = p.system.free_nodes().vertex(k);
    const Eigen::Vector3d s(p.start.u(z, 0), p.start.u(z, 1), p.start.u(z, 2));
    const double expected = p.system.weights().beta[static_cast<Eigen::Index>(z)] * (s.squaredNorm() - 1);
    CHECK(r0[nu + static_cast<Eigen::Index>(k)] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("Jacobian is symmetric and matches finite differences") {
  SUBCASE("sphere, 2D level 2") {
    const Problem p = make_problem(ExampleId::inv_stereo, 2, nullptr, 0.2);
    const SparseMatrix j = assemble_jacobian(p.system, p.start);
    const SparseMatrix jt = j.transpose();
    CHECK((j - jt).norm() <= 1e-14);
    CHECK(fd_jacobian_error(p.system, p.start, 20, 1) <= 1e-6);
  }
  SUBCASE("ellipsoid (1,1,2), 2D level 2") {
    const Problem p = make_problem(ExampleId::ellipsoid_custom, 2, tall_ellipsoid(), 0.2);
    CHECK(fd_jacobian_error(p.system, p.start, 20, 2) <= 1e-6);
  }
  SUBCASE("sphere, 3D level 1") {
    const Problem p = make_problem(ExampleId::radial, 1);
    CHECK(fd_jacobian_error(p.system, p.start, 5, 3) <= 1e-6);
  }
  SUBCASE("sphere zero-order block is 2 beta_z lambda(z) I") {
    const Problem p = make_problem(ExampleId::inv_stereo, 2, nullptr, 0.2);
    const SparseMatrix j = assemble_jacobian(p.system, p.start);
    const SparseMatrix& a = p.system.stiffness_free();
    for (std::size_t k = 0; k < p.system.num_free_nodes(); ++k) {
      const std::size_t z = p.system.free_nodes().vertex(k);
      const double zero_order = 2 * p.system.weights().beta[static_cast<Eigen::Index>(z)] * p.start.lambda(z);
      const auto kk = static_cast<Eigen::Index>(k);
      for (int i = 0; i < 3; ++i) {
        const auto row = 3 * kk + i;
        CHECK(j.coeff(row, row) == doctest::Approx(a.coeff(kk, kk) + zero_order));
        CHECK(j.coeff(row, 3 * kk + (i + 1) % 3) == 0.0);
      }
    }
  }
}

TEST_CASE("quadratic targets give an exactly quadratic residual") {
  // F(x + d) - F(x) - J(x) d depends only on d when D^3 g = 0.
  std::mt19937_64 rng(4);
  const Problem p = make_problem(ExampleId::ellipsoid_custom, 2, tall_ellipsoid(), 0.1);
  const Vector d = 0.1 * random_direction(p.system.num_unknowns(), rng);
  auto remainder = [&](const SaddleState& x) {
    return Vector(assemble_residual(p.system, p.system.apply_correction(x, d)) - assemble_residual(p.system, x) -
                  assemble_jacobian(p.system, x) * d);
  };
  const SaddleState other = p.system.apply_correction(p.start, random_direction(p.system.num_unknowns(), rng));
  const Vector r1 = remainder(p.start);
  const Vector r2 = remainder(other);
  CHECK(r1.norm() > 0.0);
  CHECK((r1 - r2).norm() <= 1e-12 * r1.norm() + 1e-14);
}

TEST_CASE("KKT solve") {
  const Problem p = make_problem(ExampleId::inv_stereo, 3, nullptr, 0.1);
  const SparseMatrix j = assemble_jacobian(p.system, p.start);
  std::mt19937_64 rng(5);
  const Vector x_known = random_direction(p.system.num_unknowns(), rng);
  const Vector rhs = j * x_known;

  for (KktMethod method : {KktMethod::direct, KktMethod::iterative}) {
    KktOptions options;
    options.method = method;
    KktSolver solver(options);
    const Vector x = solver.solve(j, rhs);
    CHECK((x - x_known).norm() <= 1e-8 * x_known.norm());
    CHECK(solver.last_relative_residual() <= 1e-10);
    const Vector x2 = solver.solve(j, 2.0 * rhs);
    CHECK((x2 - 2.0 * x).norm() <= 1e-9 * x.norm());
    CHECK(solver.solve(j, Vector::Zero(rhs.size())).norm() == 0.0);
  }
  CHECK_THROWS_AS(solve_kkt(j, Vector::Zero(3)), DimensionMismatch);

  // Singular matrix: a zero row and column.
  SparseMatrix singular = j;
  singular.prune([](Eigen::Index r, Eigen::Index c, double) { return r != 0 && c != 0; });
  CHECK_THROWS_AS(solve_kkt(singular, rhs), LinearSolveFailure);
}

TEST_CASE("SPD solver") {
  const Problem p = make_problem(ExampleId::inv_stereo, 3);
  const SparseMatrix& a = p.system.stiffness_free();
  const Vector b = Vector::Ones(a.rows());
  const SpdSolver solver(a);
  CHECK((a * solver.solve(b) - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("Newton from interpolants") {
  const Problem p = make_problem(ExampleId::inv_stereo, 3);
  NewtonOptions options;
  options.multiplier_norm_scale = kMultiplierScale;
  const NewtonResult result = newton_solve(p.system, p.start, options);
  REQUIRE(result.trace.converged());
  CHECK(result.trace.iterations() <= 3);
  CHECK(result.trace.final_residual <= 1e-9);
  CHECK(result.trace.steps.back().correction_norm <= 1e-10);
  // Residuals decrease along the accepted steps after the first.
  for (std::size_t k = 2; k < result.trace.steps.size(); ++k)
    CHECK(result.trace.steps[k].residual_norm < result.trace.steps[k - 1].residual_norm);
  for (std::size_t z = 0; z < p.mesh->num_vertices(); ++z) {
    const Eigen::Vector3d s(result.state.u(z, 0), result.state.u(z, 1), result.state.u(z, 2));
    CHECK(std::abs(s.norm() - 1.0) <= 1e-9);
  }

  // Determinism.
  const NewtonResult again = newton_solve(p.system, p.start, options);
  CHECK(again.state.u.coefficients() == result.state.u.coefficients());
  CHECK(again.trace.iterations() == result.trace.iterations());

  std::ostringstream csv;
  write_trace_csv(csv, result.trace);
  const std::string text = csv.str();
  CHECK(text.rfind("step,correction_norm,residual_norm,seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == result.trace.iterations() + 1);
}

TEST_CASE("Newton failures are reported, not thrown") {
  const Problem p = make_problem(ExampleId::inv_stereo, 4, nullptr, 1.0);
  NewtonOptions options;
  options.max_iter = 2;
  const NewtonResult result = newton_solve(p.system, p.start, options);
  CHECK_FALSE(result.trace.converged());
  CHECK(result.trace.iterations() == 2);
  CHECK(result.trace.status != NewtonStatus::converged);

  options.eps_stop = 0.0;
  CHECK_THROWS_AS(newton_solve(p.system, p.start, options), ConfigError);
}

TEST_CASE("non-quadratic targets in 3D need an override") {
  const MeshPtr mesh = mesh_ptr(3, 1);
  const auto quartic = std::make_shared<const TargetManifold>(
      3,
      [](const Eigen::VectorXd& s) { return s[0] * s[0] + s[1] * s[1] + std::pow(s[2], 4) - 1; },
      [](const Eigen::VectorXd& s) { return Eigen::VectorXd{{2 * s[0], 2 * s[1], 4 * std::pow(s[2], 3)}}; },
      [](const Eigen::VectorXd& s) { return Eigen::MatrixXd(Eigen::VectorXd{{2.0, 2.0, 12 * s[2] * s[2]}}.asDiagonal()); },
      false);
  // Boundary data e_1 lies on the quartic.
  auto boundary = make_boundary_data(mesh, *quartic, [](std::span<const double>, std::span<double> out) {
    out[0] = 1.0;
    out[1] = out[2] = 0.0;
  });
  CHECK_THROWS_AS(SaddleSystem(mesh, quartic, boundary), ConfigError);
  CHECK_NOTHROW(SaddleSystem(mesh, quartic, boundary, SystemPolicy{true}));
}

TEST_CASE("inf-sup diagnostic") {
  // Level 1 has a single interior node and sits far from the asymptotic value.
  std::vector<double> values;
  for (int level = 2; level <= 4; ++level) {
    const Problem p = make_problem(ExampleId::inv_stereo, level);
    values.push_back(infsup_diagnostic(p.system, p.start));
    CHECK(values.back() > 0.0);
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  CHECK(*hi / *lo <= 2.0);

  // b is linear in u: B(2u) = 2 B(u).
  const Problem p = make_problem(ExampleId::inv_stereo, 2);
  SaddleState doubled = p.start;
  doubled.u.coefficients() *= 2.0;
  const SparseMatrix b1 = assemble_constraint_block(p.system, p.start);
  const SparseMatrix b2 = assemble_constraint_block(p.system, doubled);
  CHECK((b2 - 2.0 * b1).norm() == 0.0);

  const Problem big = make_problem(ExampleId::inv_stereo, 6);
  CHECK_THROWS_AS(infsup_diagnostic(big.system, big.start), Error);
}

TEST_CASE("dual residual norm of interpolants decays like h") {
  std::vector<double> res, h;
  for (int level = 2; level <= 6; ++level) {
    const Problem p = make_problem(ExampleId::inv_stereo, level);
    res.push_back(residual_dual_norm(p.system, p.start));
    h.push_back(p.mesh->h_max());
  }
  for (std::size_t k = 2; k < res.size(); ++k) {
    const double rate = std::log(res[k] / res[k - 1]) / std::log(h[k] / h[k - 1]);
    CHECK(rate >= 0.9);
  }
}
