#include "hmfem/quadrature.hpp"

#include "hmfem/error.hpp"

namespace hmfem {

namespace {

QuadratureRule make_triangle_rule() {
  // Dunavant, degree 4.
  QuadratureRule rule{2, 4, {}, {}};
  const double a1 = 0.445948490915965, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, w2 = 0.109951743655322;
  for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    rule.points.push_back({a, a, b, 0.0});
    rule.points.push_back({a, b, a, 0.0});
    rule.points.push_back({b, a, a, 0.0});
    rule.weights.insert(rule.weights.end(), 3, w);
  }
  return rule;
}

QuadratureRule make_tetrahedron_rule() {
  // Keast/Walkington 14-point rule, degree 5, positive weights.
  QuadratureRule rule{3, 5, {}, {}};
  const double a1 = 0.3108859192633006, w1 = 0.1126879257180162;
  const double a2 = 0.0927352503108912, w2 = 0.0734930431163619;
  for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 3.0 * a;
    rule.points.push_back({a, a, a, b});
    rule.points.push_back({a, a, b, a});
    rule.points.push_back({a, b, a, a});
    rule.points.push_back({b, a, a, a});
    rule.weights.insert(rule.weights.end(), 4, w);
  }
  const double c = 0.0455037041256496, d = 0.5 - c, w3 = 0.0425460207770812;
  rule.points.push_back({c, c, d, d});
  rule.points.push_back({c, d, c, d});
  rule.points.push_back({c, d, d, c});
  rule.points.push_back({d, c, c, d});
  rule.points.push_back({d, c, d, c});
  rule.points.push_back({d, d, c, c});
  rule.weights.insert(rule.weights.end(), 6, w3);
  return rule;
}

}  // namespace

const QuadratureRule& simplex_rule(int dim) {
  static const QuadratureRule triangle = make_triangle_rule();
  static const QuadratureRule tetrahedron = make_tetrahedron_rule();
  if (dim == 2) return triangle;
  if (dim == 3) return tetrahedron;
  throw Error("no quadrature rule for dimension " + std::to_string(dim));
}

}  // namespace hmfem
