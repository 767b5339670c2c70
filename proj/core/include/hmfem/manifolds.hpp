#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>

namespace hmfem {

/// Hypersurface {s in R^m : g(s) = 0} given by a level-set function with its
/// gradient and Hessian.
class TargetManifold {
 public:
  enum class Kind { sphere, ellipsoid, custom };

  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  /// Custom manifold from callbacks. `quadratic` declares D^2 g constant.
  TargetManifold(int m, ValueFn g, GradientFn dg, HessianFn d2g, bool quadratic);

  int ambient_dim() const { return m_; }
  Kind kind() const { return kind_; }
  bool is_quadratic() const { return quadratic_; }
  /// Semi-axes for sphere (all ones) and ellipsoid; empty for custom.
  const Eigen::VectorXd& semi_axes() const { return semi_axes_; }
  std::string name() const;

  double value(const Eigen::VectorXd& s) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const;

  /// Radial projection s / sqrt(g(s) + 1) onto a quadric centered at 0.
  /// Only defined for sphere and ellipsoid.
  Eigen::VectorXd radial_projection(const Eigen::VectorXd& s) const;

  friend TargetManifold sphere(int m);
  friend TargetManifold ellipsoid(const Eigen::VectorXd& semi_axes);

 private:
  TargetManifold() = default;

  int m_ = 0;
  Kind kind_ = Kind::custom;
  bool quadratic_ = false;
  Eigen::VectorXd semi_axes_;
  Eigen::VectorXd inv_axes2_;  // 1 / a_i^2 for quadrics
  ValueFn g_;
  GradientFn dg_;
  HessianFn d2g_;
};

using ManifoldPtr = std::shared_ptr<const TargetManifold>;

/// g(s) = |s|^2 - 1.
TargetManifold sphere(int m);
/// g(s) = sum_i s_i^2 / a_i^2 - 1.
TargetManifold ellipsoid(const Eigen::VectorXd& semi_axes);

/// |g(s)|, the constraint violation at s.
double closest_point_residual(const TargetManifold& manifold, const Eigen::VectorXd& s);

}  // namespace hmfem
