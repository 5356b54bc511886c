#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biwarp/geometry.hpp"

namespace biwarp {

/// One warped factor (1: anti-invariant fiber, 2: slant fiber).
struct FactorReport {
  int factor = 1;
  bool present = false;
  std::vector<int> coords;     // fiber parameter indices
  MatrixXd block;              // fiber block of the induced metric at u
  MatrixXd ref_block;          // same block at the reference base point
  double ratio = 1.0;          // <block, ref_block>_F / |ref_block|_F^2
  double f = 1.0;              // warping function candidate
  double conformal_residual = 0.0;
  double off_diagonal = 0.0;   // largest off-diagonal entry of the block
  std::optional<double> hint;  // closed-form value at u, when the manifest has one
  double hint_mismatch = 0.0;
  double hint_gradient_mismatch = 0.0;
  double fiber_variation = 0.0;
  bool fiber_dependent = false;
  VectorXd dlog;               // d_a ln f for every parameter (zero off the base)
  VectorXd gradient;           // ambient components of grad ln f
  double grad_norm2 = 0.0;
  double xi_derivative = 0.0;  // xi(ln f), when xi is tangent
};

struct WarpReport {
  std::vector<int> base;
  std::vector<double> reference;  // base coordinates at the domain midpoint
  MatrixXd base_block;
  double off_block = 0.0;         // max |G_ab| with a, b in different factors
  FactorReport f1;
  FactorReport f2;

  const FactorReport& factor(int i) const { return i == 1 ? f1 : f2; }
  /// X(ln f_i) for a tangent vector X.
  double dlogf(int i, const PointGeometry& geo, const VectorXd& X) const;
};

/// Induced metric split into base and fiber blocks, warping candidates from
/// fiber-block ratios against the reference base point, fiber-dependence
/// sweeps and hint comparison.
WarpReport metric_block_decomposition(const ImmersionSpec& spec, const AmbientStructure& amb,
                                      const PointGeometry& geo, double fiber_tol = 1e-8, bool sweep_fibers = true);

/// Fills dlog, gradient, |grad ln f|^2 and xi(ln f) for both factors from the
/// analytic base derivative of the fiber block.
void warp_gradients(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo, WarpReport& rep);

WarpReport analyze_warp(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo,
                        double fiber_tol = 1e-8, bool sweep_fibers = true);

/// |P_tan(nabla_X Z) - X(ln f_i) Z|_g for X = d_a (base) and Z = d_b (fiber of
/// factor i); nabla_X Z from central differences of the Jacobian column.
double connection_residual(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo,
                           const WarpReport& warp, int a, int b, double step = 1e-5);

struct Classification {
  std::optional<SlantReport> t, perp, theta;
  bool invariant_ok = true;
  bool anti_invariant_ok = true;
  bool proper_slant_ok = true;
  int mu_expected = 0;
  int mu_actual = 0;
};

Classification classify_distributions(const PointGeometry& geo, double tol = 1e-8, int samples = 32,
                                      unsigned long long seed = 42);

struct ReebReport {
  double normal_part = 0.0;
  int container = 0;  // 0 base, 1 anti-invariant fiber, 2 slant fiber
  double shares[3] = {0.0, 0.0, 0.0};
  bool declared_matches = true;
  bool in_fiber = false;
  double obstruction = 0.0;  // |grad ln f_i| of the fiber containing xi
  bool consistent = true;     // f_i constant when xi lies in its fiber
  std::string status;
};

/// Locates xi among the factors. Throws GeometryError when xi has a normal
/// part above tol.
ReebReport reeb_placement_analysis(const ImmersionSpec& spec, const PointGeometry& geo, const WarpReport& warp,
                                   double tol = 1e-8);

}  // namespace biwarp
