#include <doctest.h>

#include <cmath>

#include "biwarp/builtin.hpp"
#include "biwarp/errors.hpp"
#include "biwarp/warp.hpp"
#include "oracles.hpp"

using namespace biwarp;

namespace {

struct Case {
  ImmersionSpec spec;
  AmbientStructure amb;
  PointGeometry geo;
  WarpReport warp;

  Case(const ImmersionSpec& s, const std::vector<double>& u)
      : spec(s), amb(s.ambient.kind, s.ambient.m), geo(compute_geometry(spec, amb, u)), warp(analyze_warp(spec, amb, geo)) {}
  Case(const std::string& text, const std::vector<double>& u) : Case(parse_immersion(text), u) {}
};

const std::vector<double> kEx2Point{1.0, 1.0, 0.3, 0.4, 0.5, 0.6, 0.0};

// xi declared in the anti-invariant fiber of a warped product over u
const char* kReebInFiber = R"MF(ambient = {kind: "sasakian_standard", m: 2}
params = [u, w, z]
blocks = {T: [u], perp: [w], theta: [], reeb: z}
reeb_factor = perp
domain = {u: [1, 2], w: [0.1, 1], z: [0, 1]}
psi = ["u", "0", "u*cos(w)", "u*sin(w)", "z"]
)MF";

}  // namespace

TEST_CASE("metric blocks of the second example") {
  const Case c(builtin_manifest("ex2"), kEx2Point);
  CHECK(c.warp.base == std::vector<int>{0, 1, 6});
  MatrixXd expected = MatrixXd::Zero(3, 3);
  expected.diagonal() << 4, 4, 1;
  CHECK((c.warp.base_block - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c.warp.f1.block - 2.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c.warp.f2.block - 4.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.warp.f1.f == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(c.warp.f2.f == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.warp.off_block < 1e-12);
  CHECK_FALSE(c.warp.f1.fiber_dependent);
  CHECK_FALSE(c.warp.f2.fiber_dependent);
  CHECK(c.warp.f1.conformal_residual < 1e-12);
  CHECK(c.warp.f2.hint_mismatch < 1e-12);
}

TEST_CASE("warping gradients of the second example") {
  const Case c(builtin_manifest("ex2"), kEx2Point);
  CHECK(c.warp.f2.dlog(0) == doctest::Approx(0.25));
  CHECK(c.warp.f2.dlog(1) == doctest::Approx(0.25));
  CHECK(c.warp.f2.grad_norm2 == doctest::Approx(1.0 / 32).epsilon(1e-12));
  CHECK(c.warp.f1.grad_norm2 == doctest::Approx(1.0 / 8).epsilon(1e-12));
  CHECK(std::abs(c.warp.f1.xi_derivative) < 1e-14);
  CHECK(std::abs(c.warp.f2.xi_derivative) < 1e-14);
  // fiber directions carry no derivative
  for (int a : {2, 3, 4, 5}) CHECK(c.warp.f2.dlog(a) == 0.0);
}

TEST_CASE("warping gradients match finite differences of the fiber block") {
  const ImmersionSpec spec = builtin_manifest("ex2");
  std::mt19937_64 rng(17);
  for (int i = 0; i < 5; ++i) {
    const auto p = oracle::random_point(spec, rng);
    const Case c(spec, p);
    for (int a : {0, 1}) {
      auto pp = p, pm = p;
      pp[a] += 1e-5;
      pm[a] -= 1e-5;
      const double fp = Case(spec, pp).warp.f2.f, fm = Case(spec, pm).warp.f2.f;
      CHECK(c.warp.f2.dlog(a) == doctest::Approx((std::log(fp) - std::log(fm)) / 2e-5).epsilon(1e-7));
    }
  }
}

TEST_CASE("bi-warped connection") {
  const Case c(builtin_manifest("ex2"), kEx2Point);
  CHECK(connection_residual(c.spec, c.amb, c.geo, c.warp, 0, 2) <= 1e-6);
  CHECK(connection_residual(c.spec, c.amb, c.geo, c.warp, 1, 5) <= 1e-6);
  // along xi the predicted coefficient is zero
  CHECK(connection_residual(c.spec, c.amb, c.geo, c.warp, 6, 3) <= 1e-6);
}

TEST_CASE("affine immersion is a plain product") {
  const Case c(oracle::kFlatProduct, {0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  CHECK(c.warp.f1.f == doctest::Approx(1.0));
  CHECK(c.warp.f2.f == doctest::Approx(1.0));
  CHECK(c.warp.f1.grad_norm2 < 1e-20);
  CHECK(c.warp.f2.grad_norm2 < 1e-20);
  CHECK(connection_residual(c.spec, c.amb, c.geo, c.warp, 0, 2) < 1e-9);
}

TEST_CASE("first example fiber dependence") {
  const Case c(builtin_manifest("ex1"), {1.5, 1.5, 0.5, 0.5, 0.5, 0.5});
  // t^2 and 1 + r^2 + s^2 both vary along their own fibers
  CHECK(c.warp.f1.fiber_dependent);
  CHECK(c.warp.f2.fiber_dependent);
  // diagonal 1 + r^2 + s^2, off-diagonal r s
  CHECK(c.warp.f2.block(0, 0) == doctest::Approx(1.5));
  CHECK(c.warp.f2.block(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("classification") {
  const Case two(builtin_manifest("ex2"), kEx2Point);
  const Classification c2 = classify_distributions(two.geo);
  CHECK(c2.invariant_ok);
  CHECK(c2.anti_invariant_ok);
  CHECK(c2.proper_slant_ok);
  CHECK(c2.mu_expected == c2.mu_actual);
  REQUIRE(c2.theta.has_value());
  CHECK(c2.theta->cos_mean == doctest::Approx(0.5));

  const Case one(builtin_manifest("ex1"), {1.5, 1.5, 0.5, 0.5, 0.5, 0.5});
  const Classification c1 = classify_distributions(one.geo);
  CHECK(c1.invariant_ok);
  CHECK(c1.anti_invariant_ok);
  CHECK(c1.proper_slant_ok);

  const Case inv(R"MF(ambient = {kind: "euclidean_contact", m: 2}
params = [u, v, z]
blocks = {T: [u, v], perp: [], theta: [], reeb: z}
domain = {u: [0, 1], v: [0, 1], z: [0, 1]}
psi = ["u", "v", "0", "0", "z"]
)MF",
                 {0.5, 0.5, 0.5});
  const Classification ci = classify_distributions(inv.geo);
  CHECK(ci.invariant_ok);
  CHECK_FALSE(ci.perp.has_value());
  CHECK_FALSE(ci.theta.has_value());
  CHECK(ci.mu_actual == 2);
  CHECK(ci.mu_expected == 2);
}

TEST_CASE("reeb placement") {
  const Case two(builtin_manifest("ex2"), kEx2Point);
  const ReebReport r2 = reeb_placement_analysis(two.spec, two.geo, two.warp);
  CHECK(r2.container == 0);
  CHECK(r2.declared_matches);
  CHECK_FALSE(r2.in_fiber);
  CHECK(r2.consistent);
  CHECK(r2.normal_part < 1e-12);

  const Case fib(kReebInFiber, {1.5, 0.5, 0.5});
  const ReebReport rf = reeb_placement_analysis(fib.spec, fib.geo, fib.warp);
  CHECK(rf.in_fiber);
  CHECK(rf.container == 1);
  CHECK(rf.declared_matches);
  CHECK_FALSE(rf.consistent);
  CHECK(rf.obstruction > 0.1);

  const Case plane(oracle::kPlane, {0.1, 0.2});
  CHECK_THROWS_AS(reeb_placement_analysis(plane.spec, plane.geo, plane.warp), GeometryError);
}
