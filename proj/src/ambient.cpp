#include "biwarp/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace biwarp {

namespace {

constexpr double kFieldStep = 1e-5;

inline int xi_(int i) { return 2 * i; }
inline int yi_(int i) { return 2 * i + 1; }

}  // namespace

AmbientStructure::AmbientStructure(AmbientKind kind, int m) : kind_(kind), m_(m) {
  if (m < 1) throw std::invalid_argument("ambient needs m >= 1");
}

AmbientStructure make_euclidean_contact(int m) { return AmbientStructure(AmbientKind::EuclideanContact, m); }
AmbientStructure make_sasakian_standard(int m) { return AmbientStructure(AmbientKind::SasakianStandard, m); }

MatrixXd AmbientStructure::metric(const VectorXd& x) const {
  const int n = dim();
  if (kind_ == AmbientKind::EuclideanContact) return MatrixXd::Identity(n, n);
  // g = eta (x) eta + 1/4 sum (dx^2 + dy^2)
  MatrixXd g = 0.25 * MatrixXd::Identity(n, n);
  const VectorXd e = eta(x);
  g(n - 1, n - 1) = 0.0;
  g += e * e.transpose();
  return g;
}

std::vector<MatrixXd> AmbientStructure::metric_derivative(const VectorXd& x) const {
  const int n = dim();
  std::vector<MatrixXd> dg(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
  if (kind_ == AmbientKind::EuclideanContact) return dg;
  const int z = n - 1;
  for (int k = 0; k < m_; ++k) {
    MatrixXd& d = dg[static_cast<std::size_t>(yi_(k))];
    for (int j = 0; j < m_; ++j) {
      d(xi_(k), xi_(j)) += 0.25 * x(yi_(j));
      d(xi_(j), xi_(k)) += 0.25 * x(yi_(j));
    }
    d(xi_(k), z) = -0.25;
    d(z, xi_(k)) = -0.25;
  }
  return dg;
}

MatrixXd AmbientStructure::phi(const VectorXd& x) const {
  const int n = dim();
  MatrixXd p = MatrixXd::Zero(n, n);
  for (int i = 0; i < m_; ++i) {
    p(yi_(i), xi_(i)) = -1.0;  // phi dx_i = -dy_i
    p(xi_(i), yi_(i)) = 1.0;   // phi dy_i = dx_i (+ y_i dz for sasakian)
    if (kind_ == AmbientKind::SasakianStandard) p(n - 1, yi_(i)) = x(yi_(i));
  }
  return p;
}

VectorXd AmbientStructure::xi(const VectorXd&) const {
  VectorXd v = VectorXd::Zero(dim());
  v(dim() - 1) = kind_ == AmbientKind::EuclideanContact ? 1.0 : 2.0;
  return v;
}

VectorXd AmbientStructure::eta(const VectorXd& x) const {
  VectorXd e = VectorXd::Zero(dim());
  if (kind_ == AmbientKind::EuclideanContact) {
    e(dim() - 1) = 1.0;
    return e;
  }
  for (int i = 0; i < m_; ++i) e(xi_(i)) = -0.5 * x(yi_(i));
  e(dim() - 1) = 0.5;
  return e;
}

std::vector<MatrixXd> AmbientStructure::christoffel(const VectorXd& x) const {
  const int n = dim();
  std::vector<MatrixXd> gamma(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
  if (kind_ == AmbientKind::EuclideanContact) return gamma;
  const auto dg = metric_derivative(x);
  const MatrixXd ginv = metric(x).inverse();
  // lowered[l](i, j) = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
  std::vector<MatrixXd> lowered(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        lowered[static_cast<std::size_t>(l)](i, j) =
            0.5 * (dg[static_cast<std::size_t>(i)](l, j) + dg[static_cast<std::size_t>(j)](l, i) -
                   dg[static_cast<std::size_t>(l)](i, j));
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (ginv(k, l) != 0.0) gamma[static_cast<std::size_t>(k)] += ginv(k, l) * lowered[static_cast<std::size_t>(l)];
    }
  }
  return gamma;
}

VectorXd AmbientStructure::contract(const std::vector<MatrixXd>& gamma, const VectorXd& X, const VectorXd& Y) {
  VectorXd out(static_cast<Eigen::Index>(gamma.size()));
  for (std::size_t k = 0; k < gamma.size(); ++k) out(static_cast<Eigen::Index>(k)) = X.dot(gamma[k] * Y);
  return out;
}

double norm_g(const MatrixXd& g, const VectorXd& v) { return std::sqrt(std::max(0.0, v.dot(g * v))); }

VectorXd covariant_phi(const AmbientStructure& amb, const VectorXd& p, const VectorXd& X, const VectorXd& Y) {
  const MatrixXd dphi = (amb.phi(p + kFieldStep * X) - amb.phi(p - kFieldStep * X)) / (2.0 * kFieldStep);
  const auto gamma = amb.christoffel(p);
  const MatrixXd ph = amb.phi(p);
  return dphi * Y + AmbientStructure::contract(gamma, X, ph * Y) - ph * AmbientStructure::contract(gamma, X, Y);
}

std::vector<std::pair<std::string, double>> StructureResiduals::named() const {
  return {{"phi_squared", phi_squared},   {"compatibility", compatibility},     {"eta_xi", eta_xi},
          {"phi_xi", phi_xi},             {"eta_phi", eta_phi},                 {"eta_metric", eta_metric},
          {"sasakian_defect", sasakian_defect}, {"reeb_defect", reeb_defect}, {"phi_parallel", phi_parallel}};
}

double StructureResiduals::algebraic_max() const {
  return std::max({phi_squared, compatibility, eta_xi, phi_xi, eta_phi, eta_metric});
}

StructureResiduals structure_residuals(const AmbientStructure& amb, const VectorXd& p, const VectorXd& X,
                                       const VectorXd& Y) {
  StructureResiduals r;
  const MatrixXd g = amb.metric(p);
  const MatrixXd ph = amb.phi(p);
  const VectorXd xi = amb.xi(p);
  const VectorXd eta = amb.eta(p);

  r.phi_squared = norm_g(g, ph * (ph * X) + X - eta.dot(X) * xi);
  r.compatibility = std::abs((ph * X).dot(g * (ph * Y)) - X.dot(g * Y) + eta.dot(X) * eta.dot(Y));
  r.eta_xi = std::abs(eta.dot(xi) - 1.0);
  r.phi_xi = norm_g(g, ph * xi);
  r.eta_phi = std::abs(eta.dot(ph * X));
  r.eta_metric = std::abs(eta.dot(X) - X.dot(g * xi));

  const VectorXd nphi = covariant_phi(amb, p, X, Y);
  r.phi_parallel = norm_g(g, nphi);
  r.sasakian_defect = norm_g(g, nphi - X.dot(g * Y) * xi + eta.dot(Y) * X);

  const VectorXd dxi = (amb.xi(p + kFieldStep * X) - amb.xi(p - kFieldStep * X)) / (2.0 * kFieldStep);
  const VectorXd nxi = dxi + AmbientStructure::contract(amb.christoffel(p), X, xi);
  r.reeb_defect = norm_g(g, nxi + ph * X);
  return r;
}

std::string certify_ambient(const AmbientStructure& amb, unsigned seed, double tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double sasakian = 0.0, parallel = 0.0, algebraic = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    VectorXd p(amb.dim()), X(amb.dim()), Y(amb.dim());
    for (int i = 0; i < amb.dim(); ++i) {
      p(i) = normal(rng);
      X(i) = normal(rng);
      Y(i) = normal(rng);
    }
    const auto r = structure_residuals(amb, p, X, Y);
    sasakian = std::max({sasakian, r.sasakian_defect, r.reeb_defect});
    parallel = std::max(parallel, r.phi_parallel);
    algebraic = std::max(algebraic, r.algebraic_max());
  }
  if (algebraic > tol) return kLabelGeneric;
  if (sasakian <= tol) return kLabelSasakian;
  if (parallel <= tol) return kLabelPhiParallel;
  return kLabelGeneric;
}

}  // namespace biwarp
