#pragma once

#include <array>
#include <string>
#include <string_view>

#include "hmfem/fem.hpp"
#include "hmfem/manifolds.hpp"
#include "hmfem/solver.hpp"

namespace hmfem {

/// Benchmark problems.
///  - inv_stereo: d=2, m=3, u = inverse stereographic projection.
///  - radial: d=3, m=3, u(x) = (x - s)/|x - s| with s = 0.9 e_3.
///  - ellipsoid_custom: d=2, inverse stereographic data radially projected
///    onto an ellipsoid; no closed-form solution.
enum class ExampleId { inv_stereo, radial, ellipsoid_custom };

ExampleId parse_example(std::string_view name);
std::string to_string(ExampleId id);

/// Harmonic-map multipliers are reported in the normalization of the sphere
/// Lagrangian 1/2 |grad u|^2 + 1/2 lambda (|u|^2 - 1), for which lambda = -|grad u|^2.
/// The solver pairs lambda with g(u) = |u|^2 - 1 directly, so its multiplier
/// is half the reported one.
inline constexpr double kMultiplierScale = 2.0;

struct ExampleFields {
  int dim = 0;
  int m = 0;
  /// Exact solution, or the start/boundary field when `has_exact` is false.
  VectorField u;
  /// Multiplier in reported normalization (or a start value).
  ScalarField lambda;
  bool has_exact = true;
};

/// Closed-form fields of an example. `manifold` is required for
/// ellipsoid_custom, whose field is projected onto it.
ExampleFields exact_solution(ExampleId id, const TargetManifold* manifold = nullptr);

/// Default target manifold of an example.
TargetManifold default_manifold(ExampleId id);

/// n(x) = rho * sin(2 pi f x_1) ... sin(2 pi f x_d).
ScalarField noise_field(double frequency, double rho, int dim);

enum class RhoRule { zero, h, h34, h12, h14, one };

inline constexpr std::array<RhoRule, 6> kAllRhoRules{RhoRule::zero, RhoRule::h,   RhoRule::h34,
                                                     RhoRule::h12,  RhoRule::h14, RhoRule::one};

RhoRule parse_rho_rule(std::string_view name);
/// CSV column name, e.g. "rho_h34".
std::string column_name(RhoRule rule);
/// Exponent p with rho = h^p; zero rule returns -1.
double rho_exponent(RhoRule rule);
double rho_value(RhoRule rule, double h);

/// Boundary data and saddle system of an example on `mesh`.
SaddleSystem make_example_system(ExampleId id, const MeshPtr& mesh, ManifoldPtr manifold,
                                  SystemPolicy policy = {});

/// (I_h u + xi_h, I_{h,D} lambda + zeta_h) with the noise added at interior
/// nodes only; the multiplier is converted to solver normalization.
SaddleState perturbed_start(const SaddleSystem& system, ExampleId id, double frequency, double rho);

/// Multiplier of a state in reported normalization.
FeFunction reported_multiplier(const SaddleState& state);

}  // namespace hmfem
