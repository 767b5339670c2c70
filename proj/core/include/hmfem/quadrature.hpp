#pragma once

#include <array>
#include <vector>

namespace hmfem {

/// Symmetric quadrature rule on the reference simplex. Points are given in
/// barycentric coordinates (d+1 entries, unused trailing entries zero) and
/// weights are normalized to sum to one, so the integral over a simplex T is
/// |T| * sum_q w_q f(x_q).
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Rule exact for polynomials of degree 4 (d=2: 6 points) or 5 (d=3: 14 points).
const QuadratureRule& simplex_rule(int dim);

}  // namespace hmfem
