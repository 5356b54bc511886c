#pragma once

#include <string>
#include <utility>
#include <vector>

#include "biwarp/ambient.hpp"
#include "biwarp/manifest.hpp"

namespace biwarp {

/// Half-open slice [begin, begin + count) of a frame.
struct Range {
  int begin = 0;
  int count = 0;
  int end() const noexcept { return begin + count; }
  bool empty() const noexcept { return count == 0; }
};

/// Extrinsic data of the immersion at one parameter point.
///
/// Tangent frame order: invariant block (phi-pairs adjacent), the xi slot,
/// anti-invariant block, slant block (each vector followed by its normalized
/// T-partner). Normal frame order: normal parts of phi on the anti-invariant
/// frame, F on the slant frame, then the complement mu.
struct PointGeometry {
  VectorXd u;
  VectorXd x;
  MatrixXd jacobian;             // N x d, columns d_a psi
  std::vector<VectorXd> second;  // second[a * d + b] = d_a d_b psi
  MatrixXd g;
  MatrixXd phi;
  VectorXd xi;
  VectorXd eta;
  std::vector<MatrixXd> gamma;
  MatrixXd induced;     // d x d pullback metric
  MatrixXd param_proj;  // d x N, v -> coordinate coefficients of P_tan v
  MatrixXd tangent;     // N x n
  MatrixXd normal;      // N x (N - n)
  MatrixXd coeff;       // d x n, tangent = jacobian * coeff
  VectorXd xi_unit;     // tangential unit xi, empty if xi is not tangent or no reeb param
  double condition = 0.0;

  Range t, reeb, perp, theta;
  Range phi_perp, f_theta, mu;

  bool has_h = false;
  std::vector<VectorXd> hv;   // hv[i * n + j] = h(e_i, e_j)
  std::vector<MatrixXd> h;    // h[r](i, j) = g(h(e_i, e_j), nu_r)
  VectorXd mean_curvature;
  double h_norm2 = 0.0;

  int n() const noexcept { return static_cast<int>(tangent.cols()); }
  int codim() const noexcept { return static_cast<int>(normal.cols()); }

  VectorXd tan_proj(const VectorXd& v) const { return jacobian * (param_proj * v); }
  VectorXd nor_proj(const VectorXd& v) const { return v - tan_proj(v); }
  /// g-inner products with the tangent frame.
  VectorXd frame_coords(const VectorXd& v) const { return tangent.transpose() * (g * v); }
  double inner(const VectorXd& a, const VectorXd& b) const { return a.dot(g * b); }
  double norm(const VectorXd& v) const { return norm_g(g, v); }
  MatrixXd slice(const Range& r) const { return tangent.middleCols(r.begin, r.count); }
  MatrixXd normal_slice(const Range& r) const { return normal.middleCols(r.begin, r.count); }
  const Range& block_range(Block b) const;
  /// h(A, B) for tangent vectors A, B given in ambient components.
  VectorXd h_apply(const VectorXd& A, const VectorXd& B) const;
  const VectorXd& h_frame(int i, int j) const { return hv[static_cast<std::size_t>(i * n() + j)]; }
};

/// Jets, Jacobian, ambient tensors and the induced metric, without frames.
/// Throws GeometryError on a degenerate Jacobian.
PointGeometry point_data(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u);

/// point_data plus the ordered orthonormal frames at u.
/// Throws GeometryError when the Jacobian is numerically rank deficient
/// (condition number of the metric-scaled Jacobian above 1e8).
PointGeometry orthonormal_frames(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u);

/// Fills h, H and |h|^2: h(d_a, d_b) is the normal part of d_a d_b psi + Gamma(d_a psi, d_b psi).
void second_fundamental_form(PointGeometry& geo);

PointGeometry compute_geometry(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u);

/// (A_N)_{ij} in the tangent frame. Rejects N with a tangential part above tol.
MatrixXd shape_operator(const PointGeometry& geo, const VectorXd& N, double tol = 1e-8);

/// phi V split into tangential and normal parts (TX, FX for tangent input,
/// tN, fN for normal input).
struct TFDecomposition {
  VectorXd tangential;
  VectorXd normal;
};
TFDecomposition tf_decompose(const PointGeometry& geo, const VectorXd& V);

enum class SlantClass { Invariant, AntiInvariant, PointwiseSlant, NotSlant };
const char* to_string(SlantClass c);

struct SlantReport {
  Block block = Block::T;
  std::vector<double> cosines;
  std::vector<double> angles;
  double cos_mean = 0.0;
  double theta = 0.0;
  double max_deviation = 0.0;  // spread of theta(X) over directions
  double cos_deviation = 0.0;  // spread of cos theta(X)
  double max_tangential = 0.0;  // max |TX| / |phi X|
  double max_normal = 0.0;      // max |FX| / |phi X|
  double t2_residual = 0.0;
  int resampled = 0;
  SlantClass classification = SlantClass::NotSlant;
  std::vector<std::string> warnings;
};

/// Samples `samples` random unit directions in the block (xi removed) and
/// measures cos theta(X) = |TX| / |phi X|.
SlantReport slant_function(const PointGeometry& geo, Block block, int samples = 32, unsigned long long seed = 42,
                           double tol = 1e-8);

/// Max residuals of the slant relations over random X, Y in block + xi:
/// tt_metric, ff_metric, tF, fF.
std::vector<std::pair<std::string, double>> slant_algebra_checks(const PointGeometry& geo, Block block,
                                                                 double cos_theta, int samples = 16,
                                                                 unsigned long long seed = 42);

}  // namespace biwarp
