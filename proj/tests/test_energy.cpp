#include <doctest.h>

#include <cmath>
#include <limits>

#include "biwarp/builtin.hpp"
#include "biwarp/energy.hpp"
#include "biwarp/quadrature.hpp"
#include "oracles.hpp"

using namespace biwarp;

TEST_CASE("Gauss-Legendre rules") {
  for (int n : {2, 5, 8, 16}) {
    const GaussRule r = gauss_legendre(n);
    double w = 0;
    for (double x : r.weights) w += x;
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    // exact through degree 2n - 1
    const std::vector<Interval> box{{0.0, 1.0}};
    const int deg = 2 * n - 1;
    const double got = tensor_gauss_legendre([&](std::span<const double> x) { return std::pow(x[0], deg); }, box, n);
    CHECK(got == doctest::Approx(1.0 / (deg + 1)).epsilon(1e-13));
  }
  const std::vector<Interval> box{{0.0, 1.0}, {1.0, 3.0}};
  const double v = tensor_gauss_legendre([](std::span<const double> x) { return x[0] * x[1] * x[1]; }, box, 3);
  CHECK(v == doctest::Approx(0.5 * 26.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("adaptive Gauss-Kronrod") {
  const std::vector<Interval> box{{0.0, 1.0}, {0.0, 2.0}};
  const AdaptiveResult r = adaptive_kronrod([](std::span<const double> x) { return std::exp(x[0] + x[1]); }, box);
  CHECK(r.value == doctest::Approx((std::exp(1.0) - 1) * (std::exp(2.0) - 1)).epsilon(1e-12));
  CHECK(r.evaluations > 0);
  const std::vector<Interval> peak{{0.0, 1.0}};
  const AdaptiveResult s = adaptive_kronrod([](std::span<const double> x) { return std::sqrt(x[0]); }, peak);
  CHECK(s.value == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("generic Dirichlet energy") {
  const std::vector<Interval> unit{{0.0, 1.0}};
  auto flat1 = [](std::span<const double>) { return MatrixXd(MatrixXd::Identity(1, 1)); };
  // f = e^u
  auto grad_exp = [](std::span<const double>) { return VectorXd(VectorXd::Ones(1)); };
  CHECK(dirichlet_energy(grad_exp, flat1, unit, 8) == doctest::Approx(0.5).epsilon(1e-14));
  // constant f
  auto zero = [](std::span<const double>) { return VectorXd(VectorXd::Zero(1)); };
  CHECK(dirichlet_energy(zero, flat1, unit, 8) == 0.0);
  // scaled metric on a square: grad^T G^-1 grad sqrt(det G) = (1/4) 4
  const std::vector<Interval> sq{{0.0, 1.0}, {0.0, 1.0}};
  auto g4 = [](std::span<const double>) { return MatrixXd(4.0 * MatrixXd::Identity(2, 2)); };
  auto gx = [](std::span<const double>) {
    VectorXd v(2);
    v << 1.0, 0.0;
    return v;
  };
  CHECK(dirichlet_energy(gx, g4, sq, 4) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS(dirichlet_energy(gx, g4, sq, 1));
}

TEST_CASE("flat product has zero warping energy") {
  const ImmersionSpec spec = parse_immersion(oracle::kFlatProduct);
  const AmbientStructure amb(spec.ambient.kind, spec.ambient.m);
  const std::vector<Interval> box{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  const std::vector<double> p{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  const EnergyReport e = dirichlet_energy_bound(spec, amb, box, p, 8, true);
  CHECK(e.volume == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(e.E1 == 0.0);
  CHECK(e.E2 == 0.0);
  CHECK(e.h_integral < 1e-20);
  CHECK(e.n1 == 1);
  CHECK(e.n2 == 2);
  // 1/2 [n1 + n2 (1 + cos^4)] with cos = 1/2
  CHECK(e.constant_integral == doctest::Approx(0.5 * (1 + 2 * (1 + 1.0 / 16))).epsilon(1e-12));
  CHECK(e.slack < 0.0);
}

TEST_CASE("second example energy") {
  const ImmersionSpec spec = builtin_manifest("ex2");
  const AmbientStructure amb(spec.ambient.kind, spec.ambient.m);
  const std::vector<Interval> box{{1.0, 2.0}, {1.0, 2.0}, {0.0, 1.0}};
  const std::vector<double> p = spec.domain_midpoint();
  const EnergyReport e = dirichlet_energy_bound(spec, amb, box, p, 8, true);
  CHECK(e.volume == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(e.doubling_change < 1e-8);
  CHECK(e.oracle_gap < 1e-6);
  // closed form: |grad ln f|^2 = (u^2 + v^2) / (4 rho^2), volume element 4
  auto closed = [](double shift) {
    return adaptive_kronrod(
               [shift](std::span<const double> x) {
                 const double q = x[0] * x[0] + x[1] * x[1];
                 const double rho = q + shift;
                 return 0.5 * q / (4 * rho * rho) * 4;
               },
               std::vector<Interval>{{1.0, 2.0}, {1.0, 2.0}})
        .value;
  };
  CHECK(e.E1 == doctest::Approx(closed(0.0)).epsilon(1e-10));
  CHECK(e.E2 == doctest::Approx(closed(2.0)).epsilon(1e-10));
  CHECK(e.lhs == doctest::Approx(2 * e.E1 + 2 * e.slant_weighted_E2));
  CHECK(e.slant_weighted_E2 > e.E2);
  CHECK(e.slack == doctest::Approx(e.rhs - e.lhs));
}

TEST_CASE("energy input errors") {
  const ImmersionSpec spec = builtin_manifest("ex2");
  const AmbientStructure amb(spec.ambient.kind, spec.ambient.m);
  const std::vector<double> p = spec.domain_midpoint();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<Interval> open{{1.0, inf}, {1.0, 2.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(dirichlet_energy_bound(spec, amb, open, p), std::invalid_argument);
  const std::vector<Interval> box{{1.0, 2.0}, {1.0, 2.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(dirichlet_energy_bound(spec, amb, box, p, 1), std::invalid_argument);
  const std::vector<Interval> short_box{{1.0, 2.0}};
  CHECK_THROWS_AS(dirichlet_energy_bound(spec, amb, short_box, p), std::invalid_argument);
  const std::vector<double> short_point{1.0};
  CHECK_THROWS_AS(dirichlet_energy_bound(spec, amb, box, short_point), std::invalid_argument);
}
