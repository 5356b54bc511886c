#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "biwarp/builtin.hpp"
#include "biwarp/errors.hpp"
#include "biwarp/geometry.hpp"
#include "oracles.hpp"

using namespace biwarp;

namespace {

struct Fixture {
  ImmersionSpec spec;
  AmbientStructure amb;
  explicit Fixture(const std::string& text)
      : spec(parse_immersion(text)), amb(spec.ambient.kind, spec.ambient.m) {}
  PointGeometry at(const std::vector<double>& u) const { return compute_geometry(spec, amb, u); }
};

double orthonormality(const PointGeometry& geo) {
  MatrixXd E(geo.x.size(), geo.n() + geo.codim());
  E << geo.tangent, geo.normal;
  return (E.transpose() * geo.g * E - MatrixXd::Identity(E.cols(), E.cols())).cwiseAbs().maxCoeff();
}

// slant cosine of the first example's theta block, from projecting phi d_r
// onto the (non-orthogonal) span of d_r, d_s
double ex1_cos(double r, double s) {
  const double a = 1 + r * r + s * s;
  return (1 + r * s) / std::sqrt(a * a - r * r * s * s);
}

}  // namespace

TEST_CASE("plane frames") {
  const Fixture f(oracle::kPlane);
  const PointGeometry geo = f.at({0.2, -0.4});
  CHECK(geo.n() == 2);
  CHECK(geo.codim() == 1);
  CHECK(std::abs(geo.tangent(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(geo.tangent(1, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(geo.normal(2, 0)) == doctest::Approx(1.0));
  CHECK(geo.h_norm2 < 1e-20);
  CHECK(geo.mean_curvature.norm() < 1e-12);
  CHECK(shape_operator(geo, geo.normal.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pivoted Gram-Schmidt on a sheared coordinate frame") {
  const Fixture f(R"MF(params = [u, v]
domain = {u: [-1, 1], v: [-1, 1]}
psi = ["2*u+v", "v", "0"]
)MF");
  const PointGeometry geo = f.at({0.0, 0.0});
  // the longest column (2, 0) is picked first
  CHECK(std::abs(geo.tangent(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(geo.tangent(1, 0)) < 1e-14);
  CHECK(std::abs(geo.tangent(1, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(geo.tangent(0, 1)) < 1e-14);
  CHECK(orthonormality(geo) < 1e-14);
}

TEST_CASE("cylinder curvature") {
  const Fixture f(oracle::kCylinder);
  const PointGeometry geo = f.at({1.1, 0.3});
  CHECK(geo.h_norm2 == doctest::Approx(1.0).epsilon(1e-12));
  // inward normal at angle u
  VectorXd inward = VectorXd::Zero(3);
  inward << -std::cos(1.1), -std::sin(1.1), 0.0;
  const MatrixXd A = shape_operator(geo, inward);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(shape_operator(geo, geo.tangent.col(0)), GeometryError);
}

TEST_CASE("saddle graph at the origin") {
  const Fixture f(oracle::kGraph);
  const PointGeometry geo = f.at({0.0, 0.0});
  CHECK(geo.h_norm2 == doctest::Approx(2.0).epsilon(1e-12));
  const VectorXd e1 = geo.tangent.col(0), e2 = geo.tangent.col(1);
  const VectorXd h12 = geo.h_apply(e1, e2);
  CHECK(std::abs(h12(2)) == doctest::Approx(1.0));
  CHECK(h12.head(2).norm() < 1e-12);
}

TEST_CASE("second fundamental form matches the projector oracle") {
  std::mt19937_64 rng(21);
  for (const std::string text : {std::string(oracle::kSphere), std::string(oracle::kGraph), builtin_manifest_text("ex2"),
                                 builtin_manifest_text("ex1")}) {
    const Fixture f(text);
    for (int i = 0; i < 5; ++i) {
      const auto p = oracle::random_point(f.spec, rng);
      const PointGeometry geo = f.at(p);
      const auto ref = oracle::projector_h(f.spec, f.amb, p);
      CHECK(oracle::relative_gap(geo.h_norm2, ref.h_norm2) < 1e-8);
      CHECK((geo.mean_curvature - ref.mean_curvature).norm() < 1e-8);
      CHECK(orthonormality(geo) < 1e-10);
      // symmetry and shape operator duality
      for (int r = 0; r < geo.codim(); ++r) {
        const MatrixXd& hr = geo.h[static_cast<std::size_t>(r)];
        CHECK((hr - hr.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((shape_operator(geo, geo.normal.col(r)) - hr).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("T and F split phi") {
  const Fixture f(builtin_manifest_text("ex1"));
  const PointGeometry geo = f.at({1.3, 1.6, 0.5, 0.4, 0.7, 0.2});
  // reeb direction
  const TFDecomposition z = tf_decompose(geo, geo.jacobian.col(5));
  CHECK(z.tangential.norm() < 1e-12);
  CHECK(z.normal.norm() < 1e-12);
  // anti-invariant coordinate field
  const TFDecomposition t = tf_decompose(geo, geo.jacobian.col(2));
  CHECK(t.tangential.norm() < 1e-12);
  CHECK(t.normal.norm() > 0.1);
  // invariant coordinate field
  const TFDecomposition u = tf_decompose(geo, geo.jacobian.col(0));
  CHECK(u.normal.norm() < 1e-12);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const VectorXd X = geo.tangent * oracle::random_vector(geo.n(), rng);
    const VectorXd Y = geo.tangent * oracle::random_vector(geo.n(), rng);
    const TFDecomposition x = tf_decompose(geo, X), y = tf_decompose(geo, Y);
    CHECK((x.tangential + x.normal - geo.phi * X).norm() < 1e-12);
    CHECK(std::abs(geo.inner(x.tangential, Y) + geo.inner(X, y.tangential)) < 1e-10);
  }
}

TEST_CASE("slant cosine of the first example") {
  const Fixture f(builtin_manifest_text("ex1"));
  const PointGeometry geo = f.at({1.5, 1.5, 0.5, 1.0, 1.0, 0.5});
  const SlantReport rep = slant_function(geo, Block::Theta, 32, 7);
  CHECK(rep.cos_mean == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(rep.max_deviation < 1e-8);
  CHECK(rep.classification == SlantClass::PointwiseSlant);
  CHECK(rep.cosines.size() >= 32);

  std::mt19937_64 rng(12);
  for (int i = 0; i < 10; ++i) {
    auto p = oracle::random_point(f.spec, rng);
    const SlantReport r = slant_function(f.at(p), Block::Theta, 32, 3);
    CHECK(r.cos_mean == doctest::Approx(ex1_cos(p[3], p[4])).epsilon(1e-9));
  }

  const SlantReport perp = slant_function(geo, Block::Perp, 32, 7);
  CHECK(perp.classification == SlantClass::AntiInvariant);
  CHECK(perp.theta == doctest::Approx(std::numbers::pi / 2));
  const SlantReport inv = slant_function(geo, Block::T, 32, 7);
  CHECK(inv.classification == SlantClass::Invariant);
  CHECK(inv.theta == doctest::Approx(0.0));
}

TEST_CASE("slant cosine of the second example") {
  const Fixture f(builtin_manifest_text("ex2"));
  const PointGeometry geo = f.at({1.0, 1.0, 0.3, 0.4, 0.5, 0.6, 0.0});
  const SlantReport rep = slant_function(geo, Block::Theta, 32, 7);
  CHECK(rep.cos_mean == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.theta == doctest::Approx(std::numbers::pi / 3).epsilon(1e-10));
  CHECK(rep.t2_residual < 1e-10);
  for (const auto& [name, residual] : slant_algebra_checks(geo, Block::Theta, rep.cos_mean)) {
    INFO(name);
    CHECK(residual < 1e-9);
  }
  // the degenerate blocks satisfy the same relations with cos = 1 and cos = 0
  for (const auto& [name, residual] : slant_algebra_checks(geo, Block::T, 1.0)) CHECK(residual < 1e-9);
  for (const auto& [name, residual] : slant_algebra_checks(geo, Block::Perp, 0.0)) CHECK(residual < 1e-9);
}

TEST_CASE("frame layout of the second example") {
  const Fixture f(builtin_manifest_text("ex2"));
  const PointGeometry geo = f.at({1.2, 1.7, 0.3, 0.4, 0.5, 0.6, 0.2});
  CHECK(geo.n() == 7);
  CHECK(geo.t.count == 2);
  CHECK(geo.reeb.count == 1);
  CHECK(geo.perp.count == 2);
  CHECK(geo.theta.count == 2);
  CHECK(geo.phi_perp.count == 2);
  CHECK(geo.f_theta.count == 2);
  CHECK(geo.mu.count == 19 - 7 - 4);
  // tangent frame spans the coordinate fields
  const MatrixXd J = geo.jacobian;
  const MatrixXd residual = J - geo.tangent * (geo.tangent.transpose() * geo.g * J);
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(orthonormality(geo) < 1e-10);
}

TEST_CASE("degenerate immersions are rejected") {
  const Fixture f(R"MF(params = [u, v]
domain = {u: [-1, 1], v: [-1, 1]}
psi = ["u+v", "u+v", "0"]
)MF");
  CHECK_THROWS_AS(f.at({0.1, 0.2}), GeometryError);
}
