#include "biwarp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace biwarp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass:
      return "pass";
    case Status::Fail:
      return "fail";
    case Status::ReportOnly:
      return "report-only";
  }
  return "?";
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::NotApplicable:
      return "n/a";
    case Variant::SasakianForm:
      return "sasakian-form";
    case Variant::EtaFreeForm:
      return "eta-free-form";
  }
  return "?";
}

CheckResult identity_check(std::string id, double residual, double tol, bool asserted, Variant variant,
                           std::string note) {
  CheckResult c;
  c.id = std::move(id);
  c.value = residual;
  c.tol = tol;
  c.variant = variant;
  c.note = std::move(note);
  c.status = !asserted ? Status::ReportOnly : c.holds() ? Status::Pass : Status::Fail;
  return c;
}

CheckResult slack_check(std::string id, double slack, double tol, bool asserted, std::string note) {
  CheckResult c;
  c.id = std::move(id);
  c.value = slack;
  c.is_slack = true;
  c.tol = tol;
  c.note = std::move(note);
  c.status = !asserted ? Status::ReportOnly : c.holds() ? Status::Pass : Status::Fail;
  return c;
}

CheckResult skipped_check(std::string id, std::string note, Variant variant) {
  CheckResult c;
  c.id = std::move(id);
  c.status = Status::ReportOnly;
  c.variant = variant;
  c.note = std::move(note);
  return c;
}

bool PointContext::sasakian() const { return ambient_label == kLabelSasakian; }
bool PointContext::phi_parallel() const { return ambient_label == kLabelPhiParallel; }
double PointContext::cos_theta() const { return cls.theta ? cls.theta->cos_mean : 0.0; }

namespace {

enum Slot { SD, SPerp, STheta };

using Args = std::vector<VectorXd>;

struct Identity {
  const char* id;
  std::vector<Slot> slots;
  bool has_eta;
  bool zero_rhs;
  bool fixed_xi;  // first argument is xi itself
  std::function<double(const Args&)> lhs;
  std::function<double(const Args&, bool)> rhs;  // bool: keep eta summands
};

std::vector<VectorXd> columns(const MatrixXd& m) {
  std::vector<VectorXd> out;
  for (Eigen::Index i = 0; i < m.cols(); ++i) out.push_back(m.col(i));
  return out;
}

}  // namespace

std::vector<CheckResult> lemma_ledger(const PointContext& ctx, int random_tuples) {
  const PointGeometry& geo = ctx.geo;
  const WarpReport& warp = ctx.warp;
  const double c2 = ctx.cos_theta() * ctx.cos_theta();

  auto h = [&](const VectorXd& a, const VectorXd& b) { return geo.h_apply(a, b); };
  auto g = [&](const VectorXd& a, const VectorXd& b) { return geo.inner(a, b); };
  auto phi = [&](const VectorXd& v) { return VectorXd(geo.phi * v); };
  auto T = [&](const VectorXd& v) { return geo.tan_proj(geo.phi * v); };
  auto F = [&](const VectorXd& v) { return geo.nor_proj(geo.phi * v); };
  auto l1 = [&](const VectorXd& v) { return warp.dlogf(1, geo, v); };
  auto l2 = [&](const VectorXd& v) { return warp.dlogf(2, geo, v); };
  auto eta = [&](const VectorXd& v) { return geo.eta.dot(v); };
  auto e = [](bool keep, double v) { return keep ? v : 0.0; };

  const std::vector<Identity> ids = {
      {"ledger.h_DD__phi_perp", {SD, SD, SPerp}, false, true, false,
       [&](const Args& a) { return g(h(a[0], a[1]), phi(a[2])); }, [](const Args&, bool) { return 0.0; }},
      {"ledger.h_DD__F_theta", {SD, SD, STheta}, false, true, false,
       [&](const Args& a) { return g(h(a[0], a[1]), F(a[2])); }, [](const Args&, bool) { return 0.0; }},
      {"ledger.h_D_perp__phi_perp", {SD, SPerp, SPerp}, true, false, false,
       [&](const Args& a) { return g(h(a[0], a[1]), phi(a[2])); },
       [&](const Args& a, bool k) { return -(l1(phi(a[0])) + e(k, eta(a[0]))) * g(a[1], a[2]); }},
      {"ledger.h_D_theta__F_theta", {SD, STheta, STheta}, true, false, false,
       [&](const Args& a) { return g(h(a[0], a[1]), F(a[2])); },
       [&](const Args& a, bool k) {
         return -l2(a[0]) * g(a[1], T(a[2])) - (l2(phi(a[0])) + e(k, eta(a[0]))) * g(a[1], a[2]);
       }},
      {"ledger.h_xi_perp__phi_perp", {SPerp, SPerp}, true, false, true,
       [&](const Args& a) { return g(h(geo.xi_unit, a[0]), phi(a[1])); },
       [&](const Args& a, bool k) { return e(k, -g(a[0], a[1])); }},
      {"ledger.h_xi_theta__F_theta", {STheta, STheta}, true, false, true,
       [&](const Args& a) { return g(h(geo.xi_unit, a[0]), F(a[1])); },
       [&](const Args& a, bool k) { return e(k, -g(a[0], a[1])); }},
      {"ledger.h_phiD_perp__phi_perp", {SD, SPerp, SPerp}, false, false, false,
       [&](const Args& a) { return g(h(phi(a[0]), a[1]), phi(a[2])); },
       [&](const Args& a, bool) { return l1(a[0]) * g(a[1], a[2]); }},
      {"ledger.h_phiD_theta__F_theta", {SD, STheta, STheta}, false, false, false,
       [&](const Args& a) { return g(h(phi(a[0]), a[1]), F(a[2])); },
       [&](const Args& a, bool) { return l2(a[0]) * g(a[1], a[2]) - l2(phi(a[0])) * g(a[1], T(a[2])); }},
      {"ledger.h_D_Ttheta__F_theta", {SD, STheta, STheta}, true, false, false,
       [&](const Args& a) { return g(h(a[0], T(a[1])), F(a[2])); },
       [&](const Args& a, bool k) {
         return (l2(phi(a[0])) + e(k, eta(a[0]))) * g(a[1], T(a[2])) - c2 * l2(a[0]) * g(a[1], a[2]);
       }},
      {"ledger.h_D_theta__FT_theta", {SD, STheta, STheta}, true, false, false,
       [&](const Args& a) { return g(h(a[0], a[1]), F(T(a[2]))); },
       [&](const Args& a, bool k) {
         return c2 * l2(a[0]) * g(a[1], a[2]) - (l2(phi(a[0])) + e(k, eta(a[0]))) * g(a[1], T(a[2]));
       }},
      {"ledger.h_phiD_Ttheta__F_theta", {SD, STheta, STheta}, false, false, false,
       [&](const Args& a) { return g(h(phi(a[0]), T(a[1])), F(a[2])); },
       [&](const Args& a, bool) { return -l2(a[0]) * g(a[1], T(a[2])) - c2 * l2(phi(a[0])) * g(a[1], a[2]); }},
      {"ledger.h_phiD_theta__FT_theta", {SD, STheta, STheta}, false, false, false,
       [&](const Args& a) { return g(h(phi(a[0]), a[1]), F(T(a[2]))); },
       [&](const Args& a, bool) { return l2(a[0]) * g(a[1], T(a[2])) + c2 * l2(phi(a[0])) * g(a[1], a[2]); }},
      {"ledger.h_D_Ttheta__FT_theta", {SD, STheta, STheta}, true, false, false,
       [&](const Args& a) { return g(h(a[0], T(a[1])), F(T(a[2]))); },
       [&](const Args& a, bool k) {
         return -c2 * l2(a[0]) * g(a[1], T(a[2])) - c2 * (l2(phi(a[0])) + e(k, eta(a[0]))) * g(a[1], a[2]);
       }},
      {"ledger.h_phiD_Ttheta__FT_theta", {SD, STheta, STheta}, false, false, false,
       [&](const Args& a) { return g(h(phi(a[0]), T(a[1])), F(T(a[2]))); },
       [&](const Args& a, bool) { return c2 * l2(a[0]) * g(a[1], a[2]) - c2 * l2(phi(a[0])) * g(a[1], T(a[2])); }},
      {"ledger.h_D_perp__F_theta", {SD, SPerp, STheta}, false, true, false,
       [&](const Args& a) { return g(h(a[0], a[1]), F(a[2])); }, [](const Args&, bool) { return 0.0; }},
      {"ledger.h_D_theta__phi_perp", {SD, STheta, SPerp}, false, true, false,
       [&](const Args& a) { return g(h(a[0], a[1]), phi(a[2])); }, [](const Args&, bool) { return 0.0; }},
  };

  std::vector<VectorXd> frames[3];
  frames[SD] = columns(geo.slice(geo.t));
  if (geo.xi_unit.size() > 0) frames[SD].push_back(geo.xi_unit);
  frames[SPerp] = columns(geo.slice(geo.perp));
  frames[STheta] = columns(geo.slice(geo.theta));

  std::mt19937_64 rng(ctx.seed);
  std::normal_distribution<double> normal;
  auto random_unit = [&](Slot s) {
    const auto& f = frames[s];
    for (;;) {
      VectorXd v = VectorXd::Zero(geo.x.size());
      for (const VectorXd& b : f) v += normal(rng) * b;
      const double nv = geo.norm(v);
      if (nv >= 1e-12) return VectorXd(v / nv);
    }
  };

  const bool generic = !ctx.sasakian() && !ctx.phi_parallel();
  const std::string pre_note = ctx.structure_ok ? "" : "bi-warped preconditions not met at this point";

  std::vector<CheckResult> out;
  for (const Identity& id : ids) {
    bool missing = id.fixed_xi && geo.xi_unit.size() == 0;
    for (Slot s : id.slots) missing = missing || frames[s].empty();
    if (missing) {
      if (id.zero_rhs) {
        out.push_back(identity_check(id.id, 0.0, ctx.tol.identity, ctx.structure_ok && !generic,
                                     Variant::NotApplicable, "vacuous: block missing"));
      } else if (id.has_eta) {
        out.push_back(skipped_check(id.id, "skipped: block missing", Variant::SasakianForm));
        out.push_back(skipped_check(id.id, "skipped: block missing", Variant::EtaFreeForm));
      } else {
        out.push_back(skipped_check(id.id, "skipped: block missing"));
      }
      continue;
    }

    double res_full = 0.0, res_free = 0.0;
    auto evaluate = [&](const Args& a) {
      const double l = id.lhs(a);
      res_full = std::max(res_full, std::abs(l - id.rhs(a, true)));
      if (id.has_eta) res_free = std::max(res_free, std::abs(l - id.rhs(a, false)));
    };
    // every tuple of frame vectors
    std::vector<std::size_t> idx(id.slots.size(), 0);
    for (;;) {
      Args a;
      for (std::size_t k = 0; k < idx.size(); ++k) a.push_back(frames[id.slots[k]][idx[k]]);
      evaluate(a);
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == frames[id.slots[k]].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    for (int r = 0; r < random_tuples; ++r) {
      Args a;
      for (Slot s : id.slots) a.push_back(random_unit(s));
      evaluate(a);
    }

    if (id.has_eta) {
      out.push_back(identity_check(id.id, res_full, ctx.tol.identity, ctx.structure_ok && ctx.sasakian(),
                                   Variant::SasakianForm, pre_note));
      out.push_back(identity_check(id.id, res_free, ctx.tol.identity, ctx.structure_ok && ctx.phi_parallel(),
                                   Variant::EtaFreeForm, pre_note));
    } else {
      out.push_back(identity_check(id.id, res_full, ctx.tol.identity, ctx.structure_ok && !generic,
                                   Variant::NotApplicable, pre_note));
    }
  }
  return out;
}

namespace {

// max |h(e_i, e_j)| and max |P h(e_i, e_j)| for i in a, j in b, where P
// removes the components along `keep` (normal frame slice).
struct PairNorms {
  double full = 0.0;
  double outside = 0.0;
  double mu = 0.0;
};

PairNorms pair_norms(const PointGeometry& geo, const Range& a, const Range& b, const Range& keep) {
  PairNorms out;
  const MatrixXd K = geo.normal_slice(keep);
  const MatrixXd M = geo.normal_slice(geo.mu);
  for (int i = a.begin; i < a.end(); ++i) {
    for (int j = b.begin; j < b.end(); ++j) {
      const VectorXd& v = geo.h_frame(i, j);
      out.full = std::max(out.full, geo.norm(v));
      const VectorXd inside = K * (K.transpose() * (geo.g * v));
      out.outside = std::max(out.outside, geo.norm(v - inside));
      const VectorXd mu = M * (M.transpose() * (geo.g * v));
      out.mu = std::max(out.mu, geo.norm(mu));
    }
  }
  return out;
}

}  // namespace

std::vector<CheckResult> mixed_geodesic_report(const PointContext& ctx) {
  const PointGeometry& geo = ctx.geo;
  const double tol = ctx.tol.identity;
  std::vector<CheckResult> out;

  auto pair_block = [&](const char* name, const Range& a, const Range& b, const Range& keep, int factor) {
    const std::string base = std::string("mixed.") + name;
    if (a.empty() || b.empty()) {
      out.push_back(skipped_check(base + ".norm", "skipped: block missing"));
      return;
    }
    const PairNorms pn = pair_norms(geo, a, b, keep);
    out.push_back(identity_check(base + ".norm", pn.full, tol, false));
    if (factor == 0) return;
    out.push_back(identity_check(base + ".mu", pn.mu, tol, false));
    const double grad = std::sqrt(ctx.warp.factor(factor).grad_norm2);
    const bool mixed = pn.full <= tol;
    const bool constant = grad <= tol;
    const double defect = mixed == constant ? 0.0 : std::max(pn.full, grad);
    const bool asserted = ctx.sasakian() && ctx.structure_ok && pn.mu <= tol;
    std::string note = std::string(mixed ? "mixed totally geodesic" : "not mixed totally geodesic") + ", f" +
                       std::to_string(factor) + (constant ? " constant" : " not constant");
    out.push_back(identity_check(base + ".biconditional", defect, tol, asserted, Variant::NotApplicable, note));
  };
  pair_block("D_perp", geo.t, geo.perp, geo.phi_perp, 1);
  pair_block("D_theta", geo.t, geo.theta, geo.f_theta, 2);
  pair_block("perp_theta", geo.perp, geo.theta, geo.mu, 0);
  return out;
}

std::vector<CheckResult> equality_diagnostics(const PointContext& ctx) {
  const PointGeometry& geo = ctx.geo;
  const double tol = ctx.tol.identity;
  std::vector<CheckResult> out;
  std::vector<std::string> held;
  auto add = [&](const char* id, const Range& a, const Range& b, const Range* keep) {
    if (a.empty() || b.empty()) {
      out.push_back(skipped_check(id, "skipped: block missing"));
      return;
    }
    const PairNorms pn = pair_norms(geo, a, b, keep ? *keep : Range{});
    const double v = keep ? pn.outside : pn.full;
    out.push_back(identity_check(id, v, tol, false));
    if (v <= tol) held.push_back(id);
  };
  add("equality.hDD", geo.t, geo.t, nullptr);
  add("equality.hPerpPerp", geo.perp, geo.perp, nullptr);
  add("equality.hThetaTheta", geo.theta, geo.theta, nullptr);
  add("equality.hPerpTheta", geo.perp, geo.theta, nullptr);
  add("equality.hDPerp_in_phiPerp", geo.t, geo.perp, &geo.phi_perp);
  add("equality.hDTheta_in_Ftheta", geo.t, geo.theta, &geo.f_theta);

  const Range all{0, geo.n()};
  const PairNorms pn = pair_norms(geo, all, all, Range{});
  out.push_back(identity_check("equality.h_mu", geo.mu.empty() ? 0.0 : pn.mu, tol, false));
  if (geo.mu.empty() || pn.mu <= tol) held.push_back("equality.h_mu");

  std::string summary;
  for (const auto& s : held) summary += (summary.empty() ? "" : ", ") + s;
  out.push_back(identity_check("equality.summary", static_cast<double>(out.size() - held.size()), 0.0, false,
                               Variant::NotApplicable, "holding: " + (summary.empty() ? "none" : summary)));
  return out;
}

std::vector<std::pair<std::string, double>> inequality_terms(int n1, int n2, double grad1_sq, double grad2_sq,
                                                             double cos_theta) {
  const double t1 = 2.0 * n1 * (grad1_sq + 1.0);
  double t2 = 0.0, t3 = 0.0;
  if (n2 > 0) {
    const double c2 = cos_theta * cos_theta;
    const double cot2 = c2 / (1.0 - c2);
    t2 = 2.0 * n2 * (1.0 + 2.0 * cot2) * grad2_sq;
    t3 = 2.0 * n2 * (1.0 + c2 * c2);
  }
  return {{"warp1", t1}, {"warp2", t2}, {"slant", t3}};
}

double contact_cr_rhs(int n1, double grad1_sq) { return 2.0 * n1 * (grad1_sq + 1.0); }

double semi_slant_rhs(int n2, double grad2_sq, double cos_theta) {
  const double c2 = cos_theta * cos_theta;
  const double s2 = 1.0 - c2;
  const double csc2 = 1.0 / s2;
  const double cot2 = c2 / s2;
  return 2.0 * n2 * (csc2 + cot2) * grad2_sq + 2.0 * n2 * (1.0 + c2 * c2);
}

double multiply_cr_rhs(const std::vector<int>& dims, const std::vector<double>& grad_sq) {
  double s = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) s += dims[i] * (grad_sq[i] + 1.0);
  return 2.0 * s;
}

namespace {

double sum_terms(const std::vector<std::pair<std::string, double>>& t) {
  double s = 0.0;
  for (const auto& [k, v] : t) s += v;
  return s;
}

InequalityReport make_report(std::string id, const PointContext& ctx) {
  InequalityReport r;
  r.id = std::move(id);
  r.lhs = ctx.geo.h_norm2;
  r.n1 = ctx.geo.perp.count;
  r.n2 = ctx.geo.theta.count;
  r.cos_theta = ctx.cos_theta();
  r.theta = std::acos(std::clamp(r.cos_theta, 0.0, 1.0));
  return r;
}

constexpr double kEndpointGuard = 1e-6;

}  // namespace

InequalityReport main_inequality(const PointContext& ctx) {
  InequalityReport r = make_report("inequality.main", ctx);
  if (r.n2 > 0 && (r.theta < kEndpointGuard || r.theta > M_PI / 2 - kEndpointGuard)) {
    r.applicable = false;
    r.note = "not applicable: slant angle at an endpoint";
    return r;
  }
  r.terms = inequality_terms(r.n1, r.n2, ctx.warp.f1.grad_norm2, ctx.warp.f2.grad_norm2, r.cos_theta);
  r.rhs = sum_terms(r.terms);
  r.slack = r.lhs - r.rhs;
  return r;
}

std::vector<InequalityReport> special_inequalities(const PointContext& ctx) {
  std::vector<InequalityReport> out;
  const double g1 = ctx.warp.f1.grad_norm2, g2 = ctx.warp.f2.grad_norm2;
  if (ctx.geo.theta.count == 0) {
    InequalityReport r = make_report("inequality.contact_cr", ctx);
    r.rhs = contact_cr_rhs(r.n1, g1);
    r.terms = {{"warp1", r.rhs}};
    r.slack = r.lhs - r.rhs;
    out.push_back(r);
  }
  if (ctx.geo.perp.count == 0 && ctx.geo.theta.count > 0) {
    InequalityReport r = make_report("inequality.semi_slant", ctx);
    if (r.theta < kEndpointGuard || r.theta > M_PI / 2 - kEndpointGuard) {
      r.applicable = false;
      r.note = "not applicable: slant angle at an endpoint";
    } else {
      r.rhs = semi_slant_rhs(r.n2, g2, r.cos_theta);
      r.terms = {{"semi_slant", r.rhs}};
      r.slack = r.lhs - r.rhs;
    }
    out.push_back(r);
  }
  if (ctx.geo.theta.count > 0 && ctx.cls.theta && ctx.cls.theta->classification == SlantClass::AntiInvariant) {
    InequalityReport r = make_report("inequality.multiply_cr", ctx);
    r.rhs = multiply_cr_rhs({r.n1, r.n2}, {g1, g2});
    r.terms = {{"multiply_cr", r.rhs}};
    r.slack = r.lhs - r.rhs;
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> inequality_checks(const PointContext& ctx) {
  std::vector<CheckResult> out;
  const bool asserted = ctx.sasakian() && ctx.structure_ok;
  const char* why = ctx.sasakian() ? "" : "reported only: ambient is not Sasakian";

  const InequalityReport main = main_inequality(ctx);
  if (main.applicable) {
    out.push_back(slack_check(main.id, main.slack, ctx.tol.slack, asserted, why));
  } else {
    out.push_back(skipped_check(main.id, main.note));
  }
  for (const InequalityReport& r : special_inequalities(ctx)) {
    if (r.applicable) {
      out.push_back(slack_check(r.id, r.slack, ctx.tol.slack, asserted, why));
    } else {
      out.push_back(skipped_check(r.id, r.note));
    }
  }

  // term-level reductions of the general right-hand side
  const double g1 = ctx.warp.f1.grad_norm2, g2 = ctx.warp.f2.grad_norm2;
  const int n1 = std::max(ctx.geo.perp.count, 1);
  const int n2 = std::max(ctx.geo.theta.count, 1);
  const double c = ctx.cos_theta();

  const double cr = sum_terms(inequality_terms(n1, 0, g1, g2, c));
  out.push_back(identity_check("reduction.contact_cr", std::abs(cr - contact_cr_rhs(n1, g1)), 0.0, true));

  if (c < 1.0 - kEndpointGuard) {
    const double ss = sum_terms(inequality_terms(0, n2, g1, g2, c));
    const double ref = semi_slant_rhs(n2, g2, c);
    out.push_back(identity_check("reduction.semi_slant", std::abs(ss - ref) / std::max(1.0, std::abs(ref)), 1e-12, true));
  } else {
    out.push_back(skipped_check("reduction.semi_slant", "not applicable: slant angle at an endpoint"));
  }

  const double mc = sum_terms(inequality_terms(n1, n2, g1, g2, 0.0));
  const double mref = multiply_cr_rhs({n1, n2}, {g1, g2});
  out.push_back(identity_check("reduction.multiply_cr", std::abs(mc - mref) / std::max(1.0, std::abs(mref)), 1e-12, true));
  return out;
}

}  // namespace biwarp
