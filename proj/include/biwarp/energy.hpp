#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biwarp/ambient.hpp"
#include "biwarp/manifest.hpp"

namespace biwarp {

/// Integrated form of the general inequality over the base factor at a fixed
/// fiber point. Slant-weighted terms are integrated pointwise.
struct EnergyReport {
  std::vector<int> base;
  std::vector<Interval> box;
  std::vector<double> fiber_point;
  int order = 8;
  int n1 = 0;
  int n2 = 0;

  double volume = 0.0;
  double E1 = 0.0;               // 1/2 int |grad ln f1|^2 dV
  double E2 = 0.0;               // 1/2 int |grad ln f2|^2 dV
  double slant_weighted_E2 = 0.0;  // 1/2 int (csc^2 + cot^2) |grad ln f2|^2 dV
  double h_integral = 0.0;       // int |h|^2 dV
  double constant_integral = 0.0;  // 1/2 int [n1 + n2 (1 + cos^4)] dV
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;            // rhs - lhs
  std::optional<double> corollary_slack;
  std::string corollary;

  double E1_doubled = 0.0;
  double E2_doubled = 0.0;
  double doubling_change = 0.0;  // max relative change under order doubling
  double E1_oracle = 0.0;
  double E2_oracle = 0.0;
  double oracle_gap = 0.0;       // max relative gap to the adaptive oracle
};

/// Tensor Gauss-Legendre evaluation over `box` (base coordinates, in the
/// order of spec.base_indices()) with volume element sqrt(det g_base).
/// `point` supplies the fixed fiber coordinates. Throws on an unbounded box or
/// order < 2.
EnergyReport dirichlet_energy_bound(const ImmersionSpec& spec, const AmbientStructure& amb,
                                    std::span<const Interval> box, std::span<const double> point, int order = 8,
                                    bool with_oracle = true);

/// 1/2 int grad^T G^{-1} grad sqrt(det G) over a box.
double dirichlet_energy(const std::function<VectorXd(std::span<const double>)>& gradient,
                        const std::function<MatrixXd(std::span<const double>)>& metric,
                        std::span<const Interval> box, int order);

}  // namespace biwarp
