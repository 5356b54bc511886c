#include "biwarp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "biwarp/builtin.hpp"
#include "biwarp/errors.hpp"
#include "biwarp/geometry.hpp"
#include "biwarp/warp.hpp"

namespace biwarp {

ImmersionSpec load_spec(const RunConfig& cfg) {
  if (cfg.example.empty() == cfg.manifest_path.empty()) {
    throw ParseError("give exactly one of --example and --manifest");
  }
  ImmersionSpec spec;
  if (!cfg.example.empty()) {
    spec = builtin_manifest(cfg.example, cfg.constants);
  } else {
    if (!cfg.constants.empty()) throw ParseError("--const only applies to built-in examples");
    std::ifstream in(cfg.manifest_path);
    if (!in) throw std::runtime_error("cannot read manifest '" + cfg.manifest_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      spec = parse_immersion(ss.str());
    } catch (const ParseError& e) {
      throw ParseError(cfg.manifest_path + ":" + e.what());
    }
  }
  if (cfg.ambient) spec.ambient.kind = *cfg.ambient;
  return spec;
}

std::vector<std::vector<double>> sample_points(const ImmersionSpec& spec, const RunConfig& cfg) {
  const std::size_t d = spec.dim();
  std::vector<std::vector<double>> out;
  if (cfg.grid > 0) {
    std::vector<int> idx(d, 0);
    for (;;) {
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k) {
        const Interval& iv = spec.domain[k];
        p[k] = iv.lo + (idx[k] + 0.5) * iv.width() / cfg.grid;
      }
      out.push_back(std::move(p));
      std::size_t k = 0;
      while (k < d && ++idx[k] == cfg.grid) idx[k++] = 0;
      if (k == d) break;
    }
    return out;
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < cfg.random; ++i) {
    std::vector<double> p(d);
    for (std::size_t k = 0; k < d; ++k) p[k] = spec.domain[k].lo + unit(rng) * spec.domain[k].width();
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

void note(std::vector<std::string>* notes, const std::string& s) {
  if (notes && std::find(notes->begin(), notes->end(), s) == notes->end()) notes->push_back(s);
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void frame_checks(const PointGeometry& geo, const Tolerances& tol, std::vector<CheckResult>& out) {
  MatrixXd E(geo.tangent.rows(), geo.tangent.cols() + geo.normal.cols());
  E << geo.tangent, geo.normal;
  const MatrixXd gram = E.transpose() * geo.g * E;
  out.push_back(identity_check("frame.orthonormality",
                               max_abs(gram - MatrixXd::Identity(gram.rows(), gram.cols())), tol.frame, true));

  double sym = 0.0;
  for (const MatrixXd& hr : geo.h) sym = std::max(sym, max_abs(hr - hr.transpose()));
  out.push_back(identity_check("frame.h_symmetry", sym, tol.frame, true));

  // g(A_N e_i, e_j) against g(h(e_i, e_j), N) for every normal frame vector
  double dual = 0.0;
  for (int r = 0; r < geo.codim(); ++r) {
    const MatrixXd A = shape_operator(geo, geo.normal.col(r));
    for (int i = 0; i < geo.n(); ++i) {
      for (int j = 0; j < geo.n(); ++j) {
        dual = std::max(dual, std::abs(A(i, j) - geo.inner(geo.h_frame(i, j), geo.normal.col(r))));
      }
    }
  }
  out.push_back(identity_check("frame.shape_operator_duality", dual, tol.frame, true));

  double skew = 0.0;
  for (int i = 0; i < geo.n(); ++i) {
    const VectorXd Ti = tf_decompose(geo, geo.tangent.col(i)).tangential;
    for (int j = 0; j < geo.n(); ++j) {
      const VectorXd Tj = tf_decompose(geo, geo.tangent.col(j)).tangential;
      skew = std::max(skew, std::abs(geo.inner(Ti, geo.tangent.col(j)) + geo.inner(geo.tangent.col(i), Tj)));
    }
  }
  out.push_back(identity_check("frame.T_skew", skew, tol.frame, true));
}

void classification_checks(const ImmersionSpec& spec, const PointGeometry& geo, const Classification& cls,
                           const Tolerances& tol, unsigned long long seed, std::vector<CheckResult>& out,
                           std::vector<std::string>* notes) {
  out.push_back(identity_check("classify.mu_dimension", std::abs(cls.mu_actual - cls.mu_expected), 0.0, true));
  if (cls.t) {
    out.push_back(identity_check("classify.T_invariant", cls.t->max_normal, tol.classification, true,
                                 Variant::NotApplicable, to_string(cls.t->classification)));
  }
  if (cls.perp) {
    out.push_back(identity_check("classify.perp_anti_invariant", cls.perp->max_tangential, tol.classification, true,
                                 Variant::NotApplicable, to_string(cls.perp->classification)));
  }
  if (!cls.theta) return;
  const SlantReport& s = *cls.theta;
  out.push_back(identity_check("classify.theta_constancy", s.cos_deviation, tol.classification, true,
                               Variant::NotApplicable, to_string(s.classification)));
  out.push_back(identity_check("classify.theta_proper", cls.proper_slant_ok ? 0.0 : 1.0, 0.0, true,
                               Variant::NotApplicable, "theta = " + format_double(s.theta)));
  out.push_back(identity_check("slant.T_squared", s.t2_residual, tol.classification, true));
  for (const std::string& w : s.warnings) note(notes, w);

  for (const auto& [name, value] : slant_algebra_checks(geo, Block::Theta, s.cos_mean, 16, seed)) {
    out.push_back(identity_check("slant." + name, value, tol.slant_algebra, true));
  }
  note(notes, "slant relation g(FX, FY) evaluated as sin^2(theta) (g(X, Y) - eta(X) eta(Y))");

  if (spec.slant_hint) {
    const double expected = spec.slant_hint->expr.eval(std::span<const double>(geo.u.data(), geo.u.size()));
    const double gap = std::abs(s.cos_mean - expected);
    const bool ok = gap <= tol.hint;
    out.push_back(identity_check("slant.hint", gap, tol.hint, spec.slant_hint->asserted, Variant::NotApplicable,
                                 "cos(theta) = " + format_double(s.cos_mean) + ", hint " + format_double(expected)));
    if (!ok) note(notes, "slant hint " + spec.slant_hint->text + " disagrees with the measured cos(theta)");
  }
}

void warp_checks(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo,
                 const WarpReport& warp, bool sasakian, bool structure_ok, const Tolerances& tol,
                 std::vector<CheckResult>& out, std::vector<std::string>* notes) {
  out.push_back(identity_check("warp.off_block", warp.off_block, tol.off_block, true));
  for (int i = 1; i <= 2; ++i) {
    const FactorReport& f = warp.factor(i);
    const std::string p = "warp.f" + std::to_string(i);
    if (!f.present) continue;
    const auto& hint = i == 1 ? spec.f1_hint : spec.f2_hint;
    if (hint) {
      out.push_back(identity_check(p + "_hint", f.hint_mismatch, tol.hint, hint->asserted, Variant::NotApplicable,
                                   "f = " + format_double(f.f) + ", hint " + format_double(*f.hint)));
      out.push_back(identity_check(p + "_hint_gradient", f.hint_gradient_mismatch, tol.hint * 100, hint->asserted));
      if (f.hint_mismatch > tol.hint) note(notes, "f" + std::to_string(i) + " hint " + hint->text + " mismatch");
    }
    out.push_back(identity_check(p + "_fiber_dependence", f.fiber_variation, tol.fiber, false, Variant::NotApplicable,
                                 f.fiber_dependent ? "fiber-dependent" : "fiber-independent"));
    if (f.fiber_dependent) note(notes, "f" + std::to_string(i) + " fiber-dependent");
    out.push_back(identity_check(p + "_conformal", f.conformal_residual, tol.fiber, false));
    if (f.conformal_residual > tol.fiber) note(notes, "f" + std::to_string(i) + " fiber block is not conformal");
    out.push_back(identity_check(p + "_grad_norm2", f.grad_norm2, 0.0, false));
    if (geo.xi_unit.size() > 0) {
      out.push_back(identity_check(p + "_xi_derivative", std::abs(f.xi_derivative), tol.identity,
                                   sasakian && structure_ok));
    }

    // connection formula for every base/fiber coordinate pair
    double worst = 0.0;
    for (int a : warp.base) {
      for (int b : f.coords) worst = std::max(worst, connection_residual(spec, amb, geo, warp, a, b));
    }
    const bool clean = !f.fiber_dependent && f.conformal_residual <= tol.fiber;
    out.push_back(identity_check("connection.f" + std::to_string(i), worst, tol.connection, clean,
                                 Variant::NotApplicable, clean ? "" : "warped structure not certified"));
  }
}

}  // namespace

std::vector<CheckResult> evaluate_point(const ImmersionSpec& spec, const AmbientStructure& amb,
                                        const std::string& ambient_label, std::span<const double> u, int index,
                                        const Tolerances& tol, unsigned long long seed,
                                        std::vector<std::string>* notes) {
  std::vector<CheckResult> out;
  try {
    const PointGeometry geo = compute_geometry(spec, amb, u);
    frame_checks(geo, tol, out);
    const Classification cls = classify_distributions(geo, tol.classification, 32, seed);
    classification_checks(spec, geo, cls, tol, seed, out, notes);
    const WarpReport warp = analyze_warp(spec, amb, geo, tol.fiber, true);
    const bool sasakian = ambient_label == kLabelSasakian;

    bool xi_in_base = spec.reeb < 0;
    if (spec.reeb >= 0) {
      try {
        const ReebReport rr = reeb_placement_analysis(spec, geo, warp, tol.classification);
        out.push_back(identity_check("reeb.tangent", rr.normal_part, tol.classification, true));
        out.push_back(identity_check("reeb.declared_factor", rr.declared_matches ? 0.0 : 1.0, 0.0, true,
                                     Variant::NotApplicable, rr.status));
        if (rr.in_fiber) {
          out.push_back(identity_check("reeb.fiber_obstruction", rr.obstruction, tol.classification, sasakian,
                                       Variant::NotApplicable, rr.status));
          if (!rr.consistent) note(notes, "xi lies in a fiber whose warping function is not constant");
        }
        xi_in_base = !rr.in_fiber;
      } catch (const GeometryError& e) {
        out.push_back(identity_check("reeb.tangent", 1.0, tol.classification, true, Variant::NotApplicable, e.what()));
      }
    }

    const bool structure_ok = xi_in_base && cls.invariant_ok && cls.anti_invariant_ok && cls.proper_slant_ok &&
                              !warp.f1.fiber_dependent && !warp.f2.fiber_dependent &&
                              warp.off_block <= tol.off_block;
    warp_checks(spec, amb, geo, warp, sasakian, structure_ok, tol, out, notes);

    const PointContext ctx{spec, geo, warp, cls, ambient_label, tol, seed, structure_ok};
    for (auto&& r : {lemma_ledger(ctx, 16), mixed_geodesic_report(ctx), equality_diagnostics(ctx),
                     inequality_checks(ctx)}) {
      out.insert(out.end(), r.begin(), r.end());
    }
    if (!structure_ok) note(notes, "bi-warped preconditions fail at some points; dependent checks are reported only");
  } catch (const GeometryError& e) {
    out.push_back(identity_check("point.geometry", 1.0, 0.0, true, Variant::NotApplicable, e.what()));
  } catch (const DomainError& e) {
    out.push_back(identity_check("point.domain", 1.0, 0.0, true, Variant::NotApplicable, e.what()));
  }
  for (CheckResult& c : out) {
    c.point = index;
    if (!std::isfinite(c.value) && c.status == Status::Pass) c.status = Status::Fail;
  }
  std::stable_sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

namespace {

void tally(RunReport& rep, const CheckResult& c) {
  switch (c.status) {
    case Status::Pass:
      ++rep.summary.pass;
      break;
    case Status::Fail:
      ++rep.summary.fail;
      break;
    case Status::ReportOnly:
      ++rep.summary.report_only;
      break;
  }
}

RunReport start_report(const ImmersionSpec& spec, const RunConfig& cfg, const AmbientStructure& amb,
                       const char* command) {
  RunReport rep;
  rep.command = command;
  rep.source = cfg.example.empty() ? cfg.manifest_path : "builtin:" + cfg.example;
  rep.manifest = to_manifest(spec);
  rep.ambient = spec.ambient;
  rep.ambient_label = certify_ambient(amb);
  rep.tol = cfg.tol;
  rep.seed = cfg.seed;
  if (rep.ambient_label != kLabelSasakian) {
    rep.notes.push_back("ambient is " + rep.ambient_label +
                        ", not Sasakian: Sasakian-form identities and the inequalities are reported only");
  }
  return rep;
}

void finish_notes(RunReport& rep, const ImmersionSpec& spec, const std::vector<std::string>& found) {
  rep.notes.insert(rep.notes.end(), found.begin(), found.end());
  for (const std::string& n : spec.notes) rep.notes.push_back("manifest: " + n);
}

}  // namespace

RunReport run_verify(const ImmersionSpec& spec, const RunConfig& cfg) {
  if (cfg.grid < 0 || cfg.random < 0) throw std::invalid_argument("sample counts must be non-negative");
  const AmbientStructure amb(spec.ambient.kind, spec.ambient.m);
  RunReport rep = start_report(spec, cfg, amb, "verify");
  RunConfig sampling = cfg;
  if (sampling.grid == 0 && sampling.random == 0) sampling.grid = 2;
  rep.sampling = sampling.grid > 0 ? "grid " + std::to_string(sampling.grid)
                                   : "random " + std::to_string(sampling.random);
  std::vector<std::string> found;
  const auto points = sample_points(spec, sampling);
  for (std::size_t i = 0; i < points.size(); ++i) {
    PointRecord pr;
    pr.index = static_cast<int>(i);
    pr.u = points[i];
    pr.checks = evaluate_point(spec, amb, rep.ambient_label, points[i], pr.index, cfg.tol, cfg.seed, &found);
    for (const CheckResult& c : pr.checks) tally(rep, c);
    rep.points.push_back(std::move(pr));
  }
  finish_notes(rep, spec, found);
  return rep;
}

RunReport run_energy(const ImmersionSpec& spec, const RunConfig& cfg) {
  const AmbientStructure amb(spec.ambient.kind, spec.ambient.m);
  RunReport rep = start_report(spec, cfg, amb, "energy");
  rep.sampling = "gauss-legendre order " + std::to_string(cfg.order);

  const std::vector<int> base = spec.base_indices();
  std::set<std::string> base_names, all_names(spec.params.begin(), spec.params.end());
  for (int b : base) base_names.insert(spec.params[static_cast<std::size_t>(b)]);
  for (const auto& [name, iv] : cfg.box) {
    if (!base_names.contains(name)) throw ParseError("--box names '" + name + "', which is not a base coordinate");
    (void)iv;
  }
  for (const auto& [name, v] : cfg.fiber) {
    if (!all_names.contains(name) || base_names.contains(name)) {
      throw ParseError("--fiber names '" + name + "', which is not a fiber coordinate");
    }
    (void)v;
  }

  std::vector<Interval> box;
  for (int b : base) {
    const std::string& name = spec.params[static_cast<std::size_t>(b)];
    const auto it = cfg.box.find(name);
    box.push_back(it == cfg.box.end() ? spec.domain[static_cast<std::size_t>(b)] : it->second);
  }
  std::vector<double> point = spec.domain_midpoint();
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    const auto it = cfg.fiber.find(spec.params[k]);
    if (it != cfg.fiber.end()) point[k] = it->second;
  }

  std::vector<std::string> found;
  PointRecord pr;
  pr.index = 0;
  pr.u = point;
  const bool sasakian = rep.ambient_label == kLabelSasakian;
  try {
    const EnergyReport e = dirichlet_energy_bound(spec, amb, box, point, cfg.order, cfg.oracle);
    pr.checks.push_back(identity_check("energy.doubling", e.doubling_change, 1e-8, true));
    if (cfg.oracle) pr.checks.push_back(identity_check("energy.oracle", e.oracle_gap, 1e-6, true));
    pr.checks.push_back(slack_check("energy.bound", e.slack, cfg.tol.slack, sasakian,
                                    sasakian ? "" : "reported only: ambient is not Sasakian"));
    if (e.corollary_slack) {
      pr.checks.push_back(slack_check("energy." + e.corollary, *e.corollary_slack, cfg.tol.slack, sasakian,
                                      sasakian ? "" : "reported only: ambient is not Sasakian"));
    }
    pr.checks.push_back(identity_check("energy.volume_positive", e.volume > 0 ? 0.0 : 1.0, 0.0, true));
    rep.energy = e;
  } catch (const GeometryError& e) {
    pr.checks.push_back(identity_check("point.geometry", 1.0, 0.0, true, Variant::NotApplicable, e.what()));
  } catch (const DomainError& e) {
    pr.checks.push_back(identity_check("point.domain", 1.0, 0.0, true, Variant::NotApplicable, e.what()));
  }
  std::stable_sort(pr.checks.begin(), pr.checks.end(),
                   [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  for (CheckResult& c : pr.checks) {
    c.point = 0;
    tally(rep, c);
  }
  rep.points.push_back(std::move(pr));
  finish_notes(rep, spec, found);
  return rep;
}

namespace {

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json check_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["check_id"] = c.id;
  j["point"] = c.point;
  j[c.is_slack ? "slack" : "residual"] = number(c.value);
  j["tol"] = c.tol;
  j["status"] = to_string(c.status);
  j["variant"] = to_string(c.variant);
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const RunReport& rep) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["command"] = rep.command;
  j["source"] = rep.source;
  j["manifest"] = rep.manifest;
  j["ambient"] = {{"kind", to_string(rep.ambient.kind)}, {"m", rep.ambient.m}, {"label", rep.ambient_label}};
  j["sampling"] = rep.sampling;
  j["seed"] = rep.seed;
  j["tolerances"] = {{"identity", rep.tol.identity},
                     {"slack", rep.tol.slack},
                     {"structure", rep.tol.structure},
                     {"frame", rep.tol.frame},
                     {"classification", rep.tol.classification},
                     {"fiber", rep.tol.fiber},
                     {"connection", rep.tol.connection},
                     {"off_block", rep.tol.off_block},
                     {"hint", rep.tol.hint},
                     {"slant_algebra", rep.tol.slant_algebra}};
  auto points = nlohmann::ordered_json::array();
  for (const PointRecord& p : rep.points) {
    nlohmann::ordered_json pj;
    pj["index"] = p.index;
    pj["u"] = p.u;
    auto checks = nlohmann::ordered_json::array();
    for (const CheckResult& c : p.checks) checks.push_back(check_json(c));
    pj["checks"] = std::move(checks);
    points.push_back(std::move(pj));
  }
  j["points"] = std::move(points);
  if (rep.energy) {
    const EnergyReport& e = *rep.energy;
    nlohmann::ordered_json ej;
    auto box = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < e.base.size(); ++i) {
      box.push_back({{"param", e.base[i]}, {"lo", e.box[i].lo}, {"hi", e.box[i].hi}});
    }
    ej["box"] = std::move(box);
    ej["fiber_point"] = e.fiber_point;
    ej["order"] = e.order;
    ej["n1"] = e.n1;
    ej["n2"] = e.n2;
    ej["volume"] = number(e.volume);
    ej["E1"] = number(e.E1);
    ej["E2"] = number(e.E2);
    ej["slant_weighted_E2"] = number(e.slant_weighted_E2);
    ej["h_integral"] = number(e.h_integral);
    ej["constant_integral"] = number(e.constant_integral);
    ej["lhs"] = number(e.lhs);
    ej["rhs"] = number(e.rhs);
    ej["slack"] = number(e.slack);
    if (e.corollary_slack) ej["corollary"] = {{"id", e.corollary}, {"slack", number(*e.corollary_slack)}};
    ej["E1_doubled"] = number(e.E1_doubled);
    ej["E2_doubled"] = number(e.E2_doubled);
    ej["doubling_change"] = number(e.doubling_change);
    ej["E1_oracle"] = number(e.E1_oracle);
    ej["E2_oracle"] = number(e.E2_oracle);
    ej["oracle_gap"] = number(e.oracle_gap);
    j["energy"] = std::move(ej);
  }
  j["summary"] = {{"pass", rep.summary.pass},
                  {"fail", rep.summary.fail},
                  {"report_only", rep.summary.report_only},
                  {"points", rep.points.size()}};
  j["notes"] = rep.notes;
  j["exit_code"] = rep.exit_code();
  return j;
}

std::string to_text(const RunReport& rep) {
  std::ostringstream os;
  os << "biwarp " << kVersion << " " << rep.command << "  " << rep.source << "\n";
  os << "ambient: " << to_string(rep.ambient.kind) << " m=" << rep.ambient.m << " (" << rep.ambient_label << ")\n";
  os << "sampling: " << rep.sampling << ", " << rep.points.size() << " point(s)\n";

  // per-id aggregates: worst value and status counts
  struct Agg {
    double worst = 0.0;
    bool slack = false;
    int pass = 0, fail = 0, report = 0;
  };
  std::map<std::string, Agg> agg;
  for (const PointRecord& p : rep.points) {
    for (const CheckResult& c : p.checks) {
      Agg& a = agg[c.variant == Variant::NotApplicable ? c.id : c.id + " [" + to_string(c.variant) + "]"];
      const bool first = a.pass + a.fail + a.report == 0;
      a.slack = c.is_slack;
      if (first || (c.is_slack ? c.value < a.worst : c.value > a.worst)) a.worst = c.value;
      (c.status == Status::Pass ? a.pass : c.status == Status::Fail ? a.fail : a.report)++;
    }
  }
  for (const auto& [id, a] : agg) {
    const char* tag = a.fail ? "FAIL" : a.pass ? "pass" : "info";
    os << "  " << tag << "  " << id << "  " << (a.slack ? "min slack " : "max residual ") << format_double(a.worst);
    if (a.fail) os << "  (" << a.fail << " failing)";
    os << "\n";
  }
  if (rep.energy) {
    const EnergyReport& e = *rep.energy;
    os << "energy: E1=" << format_double(e.E1) << " E2=" << format_double(e.E2)
       << " int|h|^2=" << format_double(e.h_integral) << " vol=" << format_double(e.volume)
       << " slack=" << format_double(e.slack) << "\n";
  }
  for (const std::string& n : rep.notes) os << "note: " << n << "\n";
  os << "summary: " << rep.summary.pass << " pass, " << rep.summary.fail << " fail, " << rep.summary.report_only
     << " report-only\n";
  return os.str();
}

}  // namespace biwarp
