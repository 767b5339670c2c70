#include "hmfem/manifolds.hpp"

#include <cmath>
#include <sstream>

#include "hmfem/error.hpp"

namespace hmfem {

TargetManifold::TargetManifold(int m, ValueFn g, GradientFn dg, HessianFn d2g, bool quadratic)
    : m_(m), kind_(Kind::custom), quadratic_(quadratic), g_(std::move(g)), dg_(std::move(dg)),
      d2g_(std::move(d2g)) {
  if (m_ < 1) throw DimensionMismatch("target manifold needs m >= 1");
  if (!g_ || !dg_ || !d2g_) throw Error("custom manifold requires g, Dg and D^2g callbacks");
}

std::string TargetManifold::name() const {
  switch (kind_) {
    case Kind::sphere:
      return "sphere";
    case Kind::ellipsoid: {
      std::ostringstream os;
      os << "ellipsoid(";
      for (Eigen::Index i = 0; i < semi_axes_.size(); ++i) os << (i ? "," : "") << semi_axes_[i];
      os << ")";
      return os.str();
    }
    case Kind::custom:
      break;
  }
  return "custom";
}

double TargetManifold::value(const Eigen::VectorXd& s) const {
  if (s.size() != m_) throw DimensionMismatch("point dimension does not match manifold");
  if (kind_ == Kind::custom) return g_(s);
  return s.cwiseAbs2().dot(inv_axes2_) - 1.0;
}

Eigen::VectorXd TargetManifold::gradient(const Eigen::VectorXd& s) const {
  if (s.size() != m_) throw DimensionMismatch("point dimension does not match manifold");
  if (kind_ == Kind::custom) return dg_(s);
  return 2.0 * s.cwiseProduct(inv_axes2_);
}

Eigen::MatrixXd TargetManifold::hessian(const Eigen::VectorXd& s) const {
  if (s.size() != m_) throw DimensionMismatch("point dimension does not match manifold");
  if (kind_ == Kind::custom) return d2g_(s);
  return (2.0 * inv_axes2_).asDiagonal();
}

Eigen::VectorXd TargetManifold::radial_projection(const Eigen::VectorXd& s) const {
  if (kind_ == Kind::custom) throw Error("radial projection is only defined for quadrics");
  const double q = value(s) + 1.0;
  if (!(q > 0.0)) throw EvaluationError("cannot project the origin onto a quadric");
  return s / std::sqrt(q);
}

TargetManifold sphere(int m) {
  if (m < 2) throw DimensionMismatch("sphere target needs m >= 2");
  TargetManifold t;
  t.m_ = m;
  t.kind_ = TargetManifold::Kind::sphere;
  t.quadratic_ = true;
  t.semi_axes_ = Eigen::VectorXd::Ones(m);
  t.inv_axes2_ = Eigen::VectorXd::Ones(m);
  return t;
}

TargetManifold ellipsoid(const Eigen::VectorXd& semi_axes) {
  if (semi_axes.size() < 2) throw DimensionMismatch("ellipsoid target needs m >= 2");
  for (double a : semi_axes)
    if (!(a > 0.0)) throw Error("ellipsoid semi-axes must be positive");
  TargetManifold t;
  t.m_ = static_cast<int>(semi_axes.size());
  t.kind_ = TargetManifold::Kind::ellipsoid;
  t.quadratic_ = true;
  t.semi_axes_ = semi_axes;
  t.inv_axes2_ = semi_axes.cwiseAbs2().cwiseInverse();
  return t;
}

double closest_point_residual(const TargetManifold& manifold, const Eigen::VectorXd& s) {
  return std::abs(manifold.value(s));
}

}  // namespace hmfem
