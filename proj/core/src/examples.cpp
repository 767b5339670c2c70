#include "hmfem/examples.hpp"

#include <cmath>
#include <numbers>

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

constexpr double kRadialPole = 0.9;

void inverse_stereographic(std::span<const double> x, std::span<double> out) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  const double q = 1.0 / (r2 + 1.0);
  out[0] = 2.0 * x[0] * q;
  out[1] = 2.0 * x[1] * q;
  out[2] = (1.0 - r2) * q;
}

double inverse_stereographic_lambda(std::span<const double> x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return -8.0 / ((1.0 + r2) * (1.0 + r2));
}

void radial(std::span<const double> x, std::span<double> out) {
  const double y[3] = {x[0], x[1], x[2] - kRadialPole};
  const double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
  for (int i = 0; i < 3; ++i) out[i] = y[i] / r;
}

double radial_lambda(std::span<const double> x) {
  const double z = x[2] - kRadialPole;
  return -2.0 / (x[0] * x[0] + x[1] * x[1] + z * z);
}

}  // namespace

ExampleId parse_example(std::string_view name) {
  if (name == "inv_stereo") return ExampleId::inv_stereo;
  if (name == "radial") return ExampleId::radial;
  if (name == "ellipsoid_custom" || name == "ellipsoid") return ExampleId::ellipsoid_custom;
  throw ConfigError("unknown example '" + std::string(name) + "'");
}

std::string to_string(ExampleId id) {
  switch (id) {
    case ExampleId::inv_stereo:
      return "inv_stereo";
    case ExampleId::radial:
      return "radial";
    case ExampleId::ellipsoid_custom:
      return "ellipsoid_custom";
  }
  return "unknown";
}

ExampleFields exact_solution(ExampleId id, const TargetManifold* manifold) {
  switch (id) {
    case ExampleId::inv_stereo:
      return {2, 3, inverse_stereographic, inverse_stereographic_lambda, true};
    case ExampleId::radial:
      return {3, 3, radial, radial_lambda, true};
    case ExampleId::ellipsoid_custom: {
      if (!manifold || manifold->kind() == TargetManifold::Kind::custom || manifold->ambient_dim() != 3)
        throw ConfigError("ellipsoid_custom needs a quadric target in R^3");
      const TargetManifold target = *manifold;
      VectorField u = [target](std::span<const double> x, std::span<double> out) {
        Eigen::Vector3d s;
        inverse_stereographic(x, std::span<double>(s.data(), 3));
        const Eigen::VectorXd p = target.radial_projection(s);
        for (int i = 0; i < 3; ++i) out[i] = p[i];
      };
      return {2, 3, std::move(u), inverse_stereographic_lambda, false};
    }
  }
  throw ConfigError("unknown example");
}

TargetManifold default_manifold(ExampleId id) {
  if (id == ExampleId::ellipsoid_custom) return ellipsoid(Eigen::Vector3d(1.0, 1.0, 2.0));
  return sphere(3);
}

ScalarField noise_field(double frequency, double rho, int dim) {
  if (!(frequency > 0.0)) throw ConfigError("noise frequency must be positive");
  if (!(rho >= 0.0)) throw ConfigError("noise amplitude must be nonnegative");
  return [frequency, rho, dim](std::span<const double> x) {
    double v = rho;
    for (int c = 0; c < dim; ++c) v *= std::sin(2.0 * std::numbers::pi * frequency * x[c]);
    return v;
  };
}

RhoRule parse_rho_rule(std::string_view name) {
  if (name == "0" || name == "rho_0" || name == "zero") return RhoRule::zero;
  if (name == "h" || name == "rho_h" || name == "h^1") return RhoRule::h;
  if (name == "h^3/4" || name == "h34" || name == "rho_h34") return RhoRule::h34;
  if (name == "h^1/2" || name == "h12" || name == "rho_h12") return RhoRule::h12;
  if (name == "h^1/4" || name == "h14" || name == "rho_h14") return RhoRule::h14;
  if (name == "h^0" || name == "1" || name == "rho_1" || name == "one") return RhoRule::one;
  throw ConfigError("unknown rho rule '" + std::string(name) + "'");
}

std::string column_name(RhoRule rule) {
  switch (rule) {
    case RhoRule::zero:
      return "rho_0";
    case RhoRule::h:
      return "rho_h";
    case RhoRule::h34:
      return "rho_h34";
    case RhoRule::h12:
      return "rho_h12";
    case RhoRule::h14:
      return "rho_h14";
    case RhoRule::one:
      return "rho_1";
  }
  return "rho_?";
}

double rho_exponent(RhoRule rule) {
  switch (rule) {
    case RhoRule::zero:
      return -1.0;
    case RhoRule::h:
      return 1.0;
    case RhoRule::h34:
      return 0.75;
    case RhoRule::h12:
      return 0.5;
    case RhoRule::h14:
      return 0.25;
    case RhoRule::one:
      return 0.0;
  }
  return -1.0;
}

double rho_value(RhoRule rule, double h) {
  if (rule == RhoRule::zero) return 0.0;
  return std::pow(h, rho_exponent(rule));
}

SaddleSystem make_example_system(ExampleId id, const MeshPtr& mesh, ManifoldPtr manifold,
                                  SystemPolicy policy) {
  const ExampleFields fields = exact_solution(id, manifold.get());
  if (mesh->dim() != fields.dim)
    throw ConfigError(to_string(id) + " is posed in d=" + std::to_string(fields.dim));
  if (manifold->ambient_dim() != fields.m) throw ConfigError("target dimension does not match the example");
  BoundaryData boundary = make_boundary_data(mesh, *manifold, fields.u);
  return SaddleSystem(mesh, std::move(manifold), std::move(boundary), policy);
}

SaddleState perturbed_start(const SaddleSystem& system, ExampleId id, double frequency, double rho) {
  const ExampleFields fields = exact_solution(id, &system.manifold());
  const MeshPtr& mesh = system.mesh_ptr();
  FeFunction u = nodal_interpolate(mesh, fields.u, fields.m);
  FeFunction lambda = nodal_interpolate(mesh, fields.lambda);
  const ScalarField noise = noise_field(frequency, rho, mesh->dim());
  for (std::size_t z = 0; z < mesh->num_vertices(); ++z) {
    if (mesh->is_boundary(z)) {
      lambda(z) = 0.0;
      continue;
    }
    const double n = rho > 0.0 ? noise(mesh->vertex(z)) : 0.0;
    for (int i = 0; i < fields.m; ++i) u(z, i) += n;
    lambda(z) = (lambda(z) + n) / kMultiplierScale;
  }
  return system.make_state(std::move(u), std::move(lambda));
}

FeFunction reported_multiplier(const SaddleState& state) {
  FeFunction out = state.lambda;
  out.coefficients() *= kMultiplierScale;
  return out;
}

}  // namespace hmfem
