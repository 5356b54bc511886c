#include <doctest.h>

#include <cmath>
#include <numbers>

#include "biwarp/builtin.hpp"
#include "biwarp/checks.hpp"
#include "oracles.hpp"

using namespace biwarp;

namespace {

struct Setup {
  ImmersionSpec spec;
  AmbientStructure amb;
  PointGeometry geo;
  WarpReport warp;
  Classification cls;
  std::string label;

  Setup(const ImmersionSpec& s, const std::vector<double>& u)
      : spec(s),
        amb(s.ambient.kind, s.ambient.m),
        geo(compute_geometry(spec, amb, u)),
        warp(analyze_warp(spec, amb, geo)),
        cls(classify_distributions(geo)),
        label(certify_ambient(amb)) {}
  Setup(const std::string& text, const std::vector<double>& u) : Setup(parse_immersion(text), u) {}

  PointContext ctx(bool structure_ok = true) const { return PointContext{spec, geo, warp, cls, label, {}, 42, structure_ok}; }
};

const char* kSasakianInvariant = R"MF(ambient = {kind: "sasakian_standard", m: 2}
params = [u, v, z]
blocks = {T: [u, v], perp: [], theta: [], reeb: z}
domain = {u: [0, 1], v: [0, 1], z: [0, 1]}
psi = ["u", "v", "0", "0", "z"]
)MF";

const CheckResult* find(const std::vector<CheckResult>& v, const std::string& id, Variant var = Variant::NotApplicable) {
  for (const CheckResult& c : v) {
    if (c.id == id && c.variant == var) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("check status rules") {
  CHECK(identity_check("a", 1e-9, 1e-8, true).status == Status::Pass);
  CHECK(identity_check("a", 1e-7, 1e-8, true).status == Status::Fail);
  CHECK(identity_check("a", 1e-7, 1e-8, false).status == Status::ReportOnly);
  CHECK(slack_check("b", -1e-12, 1e-10, true).status == Status::Pass);
  CHECK(slack_check("b", -1e-9, 1e-10, true).status == Status::Fail);
  CHECK(slack_check("b", -5.0, 1e-10, false).status == Status::ReportOnly);
  CHECK(skipped_check("c", "skipped").status == Status::ReportOnly);
  CHECK(std::isnan(identity_check("a", std::nan(""), 1.0, true).value));
  CHECK(identity_check("a", std::nan(""), 1.0, true).status == Status::Fail);
}

TEST_CASE("ledger on a flat product") {
  const Setup s(oracle::kFlatProduct, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  REQUIRE(s.label == kLabelPhiParallel);
  const auto ledger = lemma_ledger(s.ctx());
  CHECK(ledger.size() >= 16);
  for (const CheckResult& c : ledger) {
    INFO(c.id, " ", to_string(c.variant));
    if (c.variant == Variant::SasakianForm) {
      CHECK(c.status == Status::ReportOnly);
    } else {
      CHECK(c.value < 1e-12);
      CHECK(c.status == Status::Pass);
    }
  }
  // the contact term is what separates the two forms
  const CheckResult* sas = find(ledger, "ledger.h_xi_perp__phi_perp", Variant::SasakianForm);
  REQUIRE(sas != nullptr);
  CHECK(sas->value == doctest::Approx(1.0));
}

TEST_CASE("ledger on the second example") {
  const Setup s(builtin_manifest("ex2"), {1.2, 1.7, 0.3, 0.4, 0.5, 0.6, 0.2});
  const auto ledger = lemma_ledger(s.ctx());
  for (const CheckResult& c : ledger) {
    if (c.variant == Variant::SasakianForm) continue;
    INFO(c.id);
    CHECK(c.value <= 1e-8);
  }
  const CheckResult* zero = find(ledger, "ledger.h_DD__phi_perp");
  REQUIRE(zero != nullptr);
  CHECK(zero->status == Status::Pass);
  const CheckResult* free = find(ledger, "ledger.h_phiD_perp__phi_perp");
  REQUIRE(free != nullptr);
  CHECK(free->value <= 1e-8);
}

TEST_CASE("ledger without anti-invariant or slant blocks") {
  const Setup s(kSasakianInvariant, {0.3, 0.4, 0.5});
  REQUIRE(s.label == kLabelSasakian);
  const auto ledger = lemma_ledger(s.ctx());
  const CheckResult* vac = find(ledger, "ledger.h_DD__phi_perp");
  REQUIRE(vac != nullptr);
  CHECK(vac->value == 0.0);
  CHECK(vac->status == Status::Pass);
  for (Variant v : {Variant::SasakianForm, Variant::EtaFreeForm}) {
    const CheckResult* xi = find(ledger, "ledger.h_xi_perp__phi_perp", v);
    REQUIRE(xi != nullptr);
    CHECK(xi->status == Status::ReportOnly);
    CHECK(xi->note.find("skipped") != std::string::npos);
  }
  const auto mixed = mixed_geodesic_report(s.ctx());
  const CheckResult* perp = find(mixed, "mixed.D_perp.norm");
  REQUIRE(perp != nullptr);
  CHECK(perp->note.find("skipped") != std::string::npos);
}

TEST_CASE("structure failures demote assertions") {
  const Setup s(oracle::kFlatProduct, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  for (const CheckResult& c : lemma_ledger(s.ctx(false))) CHECK(c.status == Status::ReportOnly);
}

TEST_CASE("mixed totally geodesic report on a flat product") {
  const Setup s(oracle::kFlatProduct, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const auto mixed = mixed_geodesic_report(s.ctx());
  for (const CheckResult& c : mixed) {
    INFO(c.id);
    CHECK(c.value < 1e-12);
  }
  const CheckResult* bi = find(mixed, "mixed.D_perp.biconditional");
  REQUIRE(bi != nullptr);
  CHECK(bi->note.find("f1 constant") != std::string::npos);
}

TEST_CASE("equality diagnostics on a flat product") {
  const Setup s(oracle::kFlatProduct, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const auto eq = equality_diagnostics(s.ctx());
  const CheckResult* summary = find(eq, "equality.summary");
  REQUIRE(summary != nullptr);
  CHECK(summary->value == 0.0);
  for (const CheckResult& c : eq) CHECK(c.status == Status::ReportOnly);
}

TEST_CASE("inequality terms") {
  const auto t = inequality_terms(2, 2, 0.0, 0.0, 0.5);
  REQUIRE(t.size() == 3);
  CHECK(t[0].second == doctest::Approx(4.0));
  CHECK(t[1].second == 0.0);
  CHECK(t[2].second == doctest::Approx(17.0 / 4));

  const auto u = inequality_terms(3, 2, 0.5, 0.25, std::cos(std::numbers::pi / 6));
  CHECK(u[0].second == doctest::Approx(9.0));
  // cot^2(pi/6) = 3
  CHECK(u[1].second == doctest::Approx(2 * 2 * 7 * 0.25));
  CHECK(u[2].second == doctest::Approx(2 * 2 * (1 + 9.0 / 16)));

  const auto none = inequality_terms(1, 0, 0.3, 99.0, 0.9);
  CHECK(none[1].second == 0.0);
  CHECK(none[2].second == 0.0);
}

TEST_CASE("special cases of the general bound") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  for (int i = 0; i < 50; ++i) {
    const double g1 = 3 * U(rng), g2 = 3 * U(rng), c = U(rng);
    const int n1 = 1 + i % 3, n2 = 1 + i % 4;
    auto sum = [](const auto& terms) {
      double s = 0;
      for (const auto& [k, v] : terms) s += v;
      return s;
    };
    CHECK(sum(inequality_terms(n1, 0, g1, g2, c)) == doctest::Approx(contact_cr_rhs(n1, g1)).epsilon(1e-14));
    CHECK(sum(inequality_terms(0, n2, g1, g2, c)) == doctest::Approx(semi_slant_rhs(n2, g2, c)).epsilon(1e-12));
    CHECK(sum(inequality_terms(n1, n2, g1, g2, 0.0)) ==
          doctest::Approx(multiply_cr_rhs({n1, n2}, {g1, g2})).epsilon(1e-14));
    // csc^2 + cot^2 = 1 + 2 cot^2
    const double s2 = 1 - c * c;
    CHECK(1 / s2 + c * c / s2 == doctest::Approx(1 + 2 * c * c / s2).epsilon(1e-13));
  }
}

TEST_CASE("general bound needs curvature") {
  const Setup s(oracle::kFlatProduct, {0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  const InequalityReport r = main_inequality(s.ctx());
  REQUIRE(r.applicable);
  CHECK(r.lhs < 1e-20);
  CHECK(r.n1 == 1);
  CHECK(r.n2 == 2);
  CHECK(r.cos_theta == doctest::Approx(0.5));
  CHECK(r.rhs == doctest::Approx(2.0 + 4.0 * (1 + 1.0 / 16)));
  CHECK(r.slack < 0.0);
  for (const CheckResult& c : inequality_checks(s.ctx())) {
    INFO(c.id);
    if (c.id.rfind("reduction.", 0) == 0) {
      CHECK(c.status == Status::Pass);
    } else {
      CHECK(c.status == Status::ReportOnly);
    }
  }
}

TEST_CASE("second example bound") {
  const Setup s(builtin_manifest("ex2"), {1.0, 1.0, 0.3, 0.4, 0.5, 0.6, 0.0});
  const InequalityReport r = main_inequality(s.ctx());
  REQUIRE(r.terms.size() == 3);
  CHECK(r.terms[2].second == doctest::Approx(17.0 / 4).epsilon(1e-10));
  CHECK(r.terms[0].second == doctest::Approx(2 * 2 * (1.0 / 8 + 1)).epsilon(1e-10));
  CHECK(r.terms[1].second == doctest::Approx(2 * 2 * (1 + 2.0 / 3) / 32).epsilon(1e-10));
  CHECK(r.slack == doctest::Approx(r.lhs - r.rhs));
}
