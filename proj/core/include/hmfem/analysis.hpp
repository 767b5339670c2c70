#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "hmfem/fem.hpp"
#include "hmfem/linear_solver.hpp"

namespace hmfem {

/// |grad v| in L2, exact for P1 (elementwise constant gradients).
double h1_seminorm(const FeFunction& v);

/// Dirichlet energy 1/2 |grad v|^2.
double dirichlet_energy(const FeFunction& v);

/// Inner product on the right-hand side of the inverse Laplacian:
/// lumped (mu_h, phi_h)_h, matching the multiplier pairing of the scheme,
/// or the exact L2 product.
enum class DualPairing { lumped, consistent };

/// Discrete H^-1 norm |grad w_h| where w_h in S1_D solves
/// (grad w_h, grad phi_h) = <mu_h, phi_h> for all phi_h in S1_D.
/// Keeps the Cholesky factor of the interior stiffness matrix for reuse.
class InverseLaplacian {
 public:
  explicit InverseLaplacian(MeshPtr mesh, DualPairing pairing = DualPairing::lumped);

  /// mu must be scalar and vanish at boundary vertices.
  double hm1_norm(const FeFunction& mu) const;
  /// Interior nodal values of w_h for the interior values of mu.
  Vector solve_interior(const Vector& mu_interior) const;

  const FreeNodeMap& free_nodes() const { return free_; }
  DualPairing pairing() const { return pairing_; }

 private:
  MeshPtr mesh_;
  DualPairing pairing_;
  FreeNodeMap free_;
  SparseMatrix mass_ff_;
  SparseMatrix stiffness_ff_;
  std::unique_ptr<SpdSolver> solver_;
};

double hm1_norm(const FeFunction& mu, DualPairing pairing = DualPairing::lumped);

/// Errors of a discrete pair against nodal interpolants of the exact solution.
/// The H^-1 error uses the multiplier interpolant with zero boundary values.
/// The L2 multiplier error keeps the boundary values of the exact multiplier
/// and uses the lumped norm, so the boundary layer where lambda_h = 0 limits
/// its rate to 1/2.
struct ErrorRecord {
  int level = 0;
  std::size_t n_vertices = 0;
  double h = 0;      ///< mesh size used for eoc (nominal for perturbed meshes)
  double h_max = 0;  ///< measured maximal simplex diameter
  double e_u_h1 = 0;        ///< |grad (u_h - I_h u)|
  double e_lambda_l2 = 0;   ///< |lambda_h - I_h lambda|_h
  double e_lambda_l2_interior = 0;  ///< |lambda_h - I_{h,D} lambda| (exact L2)
  double e_lambda_hm1 = 0;  ///< |lambda_h - I_{h,D} lambda|_{H^-1_h}
  double e_X = 0;           ///< e_u_h1 + e_lambda_hm1
  double eoc_X = 0;
  double eoc_lambda_l2 = 0;
  double eoc_lambda_hm1 = 0;
};

ErrorRecord error_X(const FeFunction& u_h, const FeFunction& lambda_h, const VectorField& exact_u,
                    const ScalarField& exact_lambda, const InverseLaplacian* inverse_laplacian = nullptr);

/// Logarithmic slopes log(v_l / v_{l-1}) / log(h_l / h_{l-1}); the first
/// entry is reported as 0.
std::vector<double> eoc(std::span<const double> values, std::span<const double> h);

/// Fills the eoc fields of a level-ordered sequence of records.
void fill_eoc(std::vector<ErrorRecord>& records);

/// CSV with columns level,n_vertices,e_X,eoc_lambda_l2,eoc_lambda_hm1,eoc_e_X.
void write_error_csv(std::ostream& out, const std::vector<ErrorRecord>& records);

}  // namespace hmfem
