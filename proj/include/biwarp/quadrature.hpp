#pragma once

#include <functional>
#include <span>
#include <vector>

#include "biwarp/expr.hpp"

namespace biwarp {

struct GaussRule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

using Integrand = std::function<double(std::span<const double>)>;
/// Writes `count` integrand values at a point.
using MultiIntegrand = std::function<void(std::span<const double>, std::span<double>)>;

double tensor_gauss_legendre(const Integrand& f, std::span<const Interval> box, int order);
std::vector<double> tensor_gauss_legendre(const MultiIntegrand& f, std::size_t count, std::span<const Interval> box,
                                          int order);

struct AdaptiveResult {
  double value = 0.0;
  long evaluations = 0;
};

/// Nested adaptive Gauss-Kronrod 7/15 with interval bisection, one axis at a
/// time. Each 1-d panel is accepted when |K15 - G7| <= rel_tol |K15|.
AdaptiveResult adaptive_kronrod(const Integrand& f, std::span<const Interval> box, double rel_tol = 1e-10,
                                int max_depth = 24);

}  // namespace biwarp
