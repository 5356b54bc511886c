#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "biwarp/manifest.hpp"

namespace biwarp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Almost contact metric structure (phi, xi, eta, g) on R^{2m+1}, coordinates
/// ordered (x1, y1, ..., xm, ym, z).
class AmbientStructure {
 public:
  AmbientStructure(AmbientKind kind, int m);

  AmbientKind kind() const noexcept { return kind_; }
  int m() const noexcept { return m_; }
  int dim() const noexcept { return 2 * m_ + 1; }

  MatrixXd metric(const VectorXd& x) const;
  /// dg[k] = partial derivative of the metric along coordinate k.
  std::vector<MatrixXd> metric_derivative(const VectorXd& x) const;
  MatrixXd phi(const VectorXd& x) const;
  VectorXd xi(const VectorXd& x) const;
  /// Components of the 1-form eta.
  VectorXd eta(const VectorXd& x) const;
  /// gamma[k](i, j) = Christoffel symbol Gamma^k_{ij} of the Levi-Civita connection.
  std::vector<MatrixXd> christoffel(const VectorXd& x) const;
  /// Gamma(X, Y)^k = Gamma^k_{ij} X^i Y^j.
  static VectorXd contract(const std::vector<MatrixXd>& gamma, const VectorXd& X, const VectorXd& Y);

 private:
  AmbientKind kind_;
  int m_;
};

AmbientStructure make_euclidean_contact(int m);
AmbientStructure make_sasakian_standard(int m);

double norm_g(const MatrixXd& g, const VectorXd& v);

/// Residuals of the almost contact and Sasakian structure equations at p for
/// directions X, Y. Covariant derivatives use the analytic Christoffel symbols
/// and central differences (step 1e-5) of the phi and xi fields.
struct StructureResiduals {
  double phi_squared = 0;      // |phi^2 X + X - eta(X) xi|_g
  double compatibility = 0;    // |g(phiX, phiY) - g(X, Y) + eta(X) eta(Y)|
  double eta_xi = 0;           // |eta(xi) - 1|
  double phi_xi = 0;           // |phi xi|_g
  double eta_phi = 0;          // |eta(phi X)|
  double eta_metric = 0;       // |eta(X) - g(X, xi)|
  double sasakian_defect = 0;  // |(nabla_X phi) Y - g(X, Y) xi + eta(Y) X|_g
  double reeb_defect = 0;      // |nabla_X xi + phi X|_g
  double phi_parallel = 0;     // |(nabla_X phi) Y|_g

  std::vector<std::pair<std::string, double>> named() const;
  double algebraic_max() const;
};

StructureResiduals structure_residuals(const AmbientStructure& amb, const VectorXd& p, const VectorXd& X,
                                       const VectorXd& Y);

/// (nabla_X phi) Y at p.
VectorXd covariant_phi(const AmbientStructure& amb, const VectorXd& p, const VectorXd& X, const VectorXd& Y);

/// "sasakian", "cosymplectic-type (φ parallel)" or "almost contact metric",
/// decided from structure residuals at a few seeded random points.
std::string certify_ambient(const AmbientStructure& amb, unsigned seed = 7, double tol = 1e-9);

inline constexpr const char* kLabelSasakian = "sasakian";
inline constexpr const char* kLabelPhiParallel = "cosymplectic-type (φ parallel)";
inline constexpr const char* kLabelGeneric = "almost contact metric";

}  // namespace biwarp
