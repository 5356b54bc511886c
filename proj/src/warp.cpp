#include "biwarp/warp.hpp"

#include <algorithm>
#include <cmath>

#include "biwarp/errors.hpp"

namespace biwarp {

namespace {

MatrixXd sub(const MatrixXd& G, const std::vector<int>& rows, const std::vector<int>& cols) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = G(rows[i], cols[j]);
  }
  return out;
}

MatrixXd induced_at(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> point) {
  const auto jets = eval_jet2(spec, point);
  const int N = amb.dim();
  const int d = static_cast<int>(spec.dim());
  MatrixXd J(N, d);
  VectorXd x(N);
  for (int k = 0; k < N; ++k) {
    x(k) = jets[static_cast<std::size_t>(k)].value;
    for (int a = 0; a < d; ++a) J(k, a) = jets[static_cast<std::size_t>(k)].grad[static_cast<std::size_t>(a)];
  }
  return J.transpose() * amb.metric(x) * J;
}

std::vector<double> reference_of(const ImmersionSpec& spec, std::span<const double> point) {
  std::vector<double> ref(point.begin(), point.end());
  const auto mid = spec.domain_midpoint();
  for (int a : spec.base_indices()) ref[static_cast<std::size_t>(a)] = mid[static_cast<std::size_t>(a)];
  return ref;
}

struct FactorValue {
  double ratio = 1.0;
  double f = 1.0;
  MatrixXd block, ref_block;
};

FactorValue factor_value(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> point,
                         const std::vector<int>& coords, const std::optional<Hint>& hint) {
  FactorValue out;
  const auto ref = reference_of(spec, point);
  out.block = sub(induced_at(spec, amb, point), coords, coords);
  out.ref_block = sub(induced_at(spec, amb, ref), coords, coords);
  const double denom = out.ref_block.squaredNorm();
  if (!(denom > 0.0)) throw GeometryError("fiber block vanishes at the reference point");
  out.ratio = (out.block.array() * out.ref_block.array()).sum() / denom;
  if (!(out.ratio > 0.0)) throw GeometryError("non-positive warping candidate");
  out.f = std::sqrt(out.ratio);
  if (hint) {
    const double h0 = hint->expr.eval(ref);
    if (!(h0 > 0.0)) throw GeometryError("warping hint is not positive at the reference point");
    out.f *= h0;
  }
  return out;
}

}  // namespace

double WarpReport::dlogf(int i, const PointGeometry& geo, const VectorXd& X) const {
  const FactorReport& fr = factor(i);
  if (!fr.present || fr.dlog.size() == 0) return 0.0;
  return fr.dlog.dot(geo.param_proj * X);
}

WarpReport metric_block_decomposition(const ImmersionSpec& spec, const AmbientStructure& amb,
                                      const PointGeometry& geo, double fiber_tol, bool sweep_fibers) {
  WarpReport rep;
  rep.base = spec.base_indices();
  const auto mid = spec.domain_midpoint();
  for (int a : rep.base) rep.reference.push_back(mid[static_cast<std::size_t>(a)]);
  rep.base_block = sub(geo.induced, rep.base, rep.base);

  const std::vector<int> groups[3] = {rep.base, spec.fiber_indices(1), spec.fiber_indices(2)};
  for (int p = 0; p < 3; ++p) {
    for (int q = p + 1; q < 3; ++q) {
      for (int a : groups[p]) {
        for (int b : groups[q]) rep.off_block = std::max(rep.off_block, std::abs(geo.induced(a, b)));
      }
    }
  }

  const std::vector<double> u(geo.u.data(), geo.u.data() + geo.u.size());
  std::vector<int> all_fiber = groups[1];
  all_fiber.insert(all_fiber.end(), groups[2].begin(), groups[2].end());

  for (int i = 1; i <= 2; ++i) {
    FactorReport& fr = i == 1 ? rep.f1 : rep.f2;
    fr.factor = i;
    fr.coords = groups[i];
    fr.present = !fr.coords.empty();
    fr.dlog = VectorXd::Zero(static_cast<Eigen::Index>(spec.dim()));
    fr.gradient = VectorXd::Zero(geo.x.size());
    if (!fr.present) continue;
    const auto& hint = i == 1 ? spec.f1_hint : spec.f2_hint;
    const FactorValue fv = factor_value(spec, amb, u, fr.coords, hint);
    fr.block = fv.block;
    fr.ref_block = fv.ref_block;
    fr.ratio = fv.ratio;
    fr.f = fv.f;
    fr.conformal_residual = (fv.block - fv.ratio * fv.ref_block).norm() / fv.block.norm();
    for (Eigen::Index r = 0; r < fv.block.rows(); ++r) {
      for (Eigen::Index c = 0; c < fv.block.cols(); ++c) {
        if (r != c) fr.off_diagonal = std::max(fr.off_diagonal, std::abs(fv.block(r, c)));
      }
    }
    if (hint) {
      fr.hint = hint->expr.eval(u);
      fr.hint_mismatch = std::abs(fr.f - *fr.hint);
    }

    // sweep each fiber coordinate to a quarter and three quarters of its range
    for (int c : sweep_fibers ? all_fiber : std::vector<int>{}) {
      const Interval& iv = spec.domain[static_cast<std::size_t>(c)];
      const double lo = iv.bounded() ? iv.lo + 0.25 * iv.width() : u[static_cast<std::size_t>(c)] - 0.5;
      const double hi = iv.bounded() ? iv.lo + 0.75 * iv.width() : u[static_cast<std::size_t>(c)] + 0.5;
      for (double at : {lo, hi}) {
        auto p = u;
        p[static_cast<std::size_t>(c)] = at;
        const double fp = factor_value(spec, amb, p, fr.coords, hint).f;
        fr.fiber_variation = std::max(fr.fiber_variation, std::abs(fp - fr.f) / std::abs(fr.f));
      }
    }
    fr.fiber_dependent = fr.fiber_variation > fiber_tol;
  }
  return rep;
}

void warp_gradients(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo, WarpReport& rep) {
  const int d = static_cast<int>(spec.dim());
  const auto dg = amb.metric_derivative(geo.x);
  const std::vector<int>& base = rep.base;
  const MatrixXd gJ = geo.g * geo.jacobian;
  const std::vector<double> u(geo.u.data(), geo.u.data() + geo.u.size());

  for (int i = 1; i <= 2; ++i) {
    FactorReport& fr = i == 1 ? rep.f1 : rep.f2;
    if (!fr.present) continue;
    const double denom = fr.ref_block.squaredNorm();
    VectorXd dbase = VectorXd::Zero(static_cast<Eigen::Index>(base.size()));
    for (std::size_t bi = 0; bi < base.size(); ++bi) {
      const int c = base[bi];
      MatrixXd dgc = MatrixXd::Zero(geo.g.rows(), geo.g.cols());
      for (int k = 0; k < geo.x.size(); ++k) {
        if (geo.jacobian(k, c) != 0.0) dgc += geo.jacobian(k, c) * dg[static_cast<std::size_t>(k)];
      }
      double dratio = 0.0;
      for (std::size_t p = 0; p < fr.coords.size(); ++p) {
        for (std::size_t q = 0; q < fr.coords.size(); ++q) {
          const int a = fr.coords[p], b = fr.coords[q];
          const VectorXd& Hca = geo.second[static_cast<std::size_t>(c * d + a)];
          const VectorXd& Hcb = geo.second[static_cast<std::size_t>(c * d + b)];
          const double dG = Hca.dot(gJ.col(b)) + gJ.col(a).dot(Hcb) +
                            geo.jacobian.col(a).dot(dgc * geo.jacobian.col(b));
          dratio += dG * fr.ref_block(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        }
      }
      dratio /= denom;
      dbase(static_cast<Eigen::Index>(bi)) = 0.5 * dratio / fr.ratio;
      fr.dlog(c) = dbase(static_cast<Eigen::Index>(bi));
    }
    if (!base.empty()) {
      const VectorXd raised = rep.base_block.ldlt().solve(dbase);
      fr.grad_norm2 = dbase.dot(raised);
      for (std::size_t bi = 0; bi < base.size(); ++bi) {
        fr.gradient += raised(static_cast<Eigen::Index>(bi)) * geo.jacobian.col(base[bi]);
      }
    }
    if (geo.xi_unit.size() > 0) fr.xi_derivative = rep.dlogf(i, geo, geo.xi);

    const auto& hint = i == 1 ? spec.f1_hint : spec.f2_hint;
    if (hint) {
      const Jet2 hj = hint->expr.jet(u);
      for (int c : base) {
        const double ad = hj.grad[static_cast<std::size_t>(c)] / hj.value;
        fr.hint_gradient_mismatch = std::max(fr.hint_gradient_mismatch, std::abs(ad - fr.dlog(c)));
      }
    }
  }
}

WarpReport analyze_warp(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo,
                        double fiber_tol, bool sweep_fibers) {
  WarpReport rep = metric_block_decomposition(spec, amb, geo, fiber_tol, sweep_fibers);
  warp_gradients(spec, amb, geo, rep);
  return rep;
}

double connection_residual(const ImmersionSpec& spec, const AmbientStructure& amb, const PointGeometry& geo,
                           const WarpReport& warp, int a, int b, double step) {
  (void)amb;
  std::vector<double> up(geo.u.data(), geo.u.data() + geo.u.size());
  auto um = up;
  up[static_cast<std::size_t>(a)] += step;
  um[static_cast<std::size_t>(a)] -= step;
  const auto jp = eval_jet2_unchecked(spec, up);
  const auto jm = eval_jet2_unchecked(spec, um);
  VectorXd dZ(geo.x.size());
  for (Eigen::Index k = 0; k < dZ.size(); ++k) {
    dZ(k) = (jp[static_cast<std::size_t>(k)].grad[static_cast<std::size_t>(b)] -
             jm[static_cast<std::size_t>(k)].grad[static_cast<std::size_t>(b)]) /
            (2.0 * step);
  }
  const VectorXd X = geo.jacobian.col(a);
  const VectorXd Z = geo.jacobian.col(b);
  const VectorXd nabla = geo.tan_proj(dZ + AmbientStructure::contract(geo.gamma, X, Z));
  double coeff = 0.0;
  for (int i = 1; i <= 2; ++i) {
    const auto& c = warp.factor(i).coords;
    if (std::find(c.begin(), c.end(), b) != c.end()) coeff = warp.factor(i).dlog(a);
  }
  return geo.norm(nabla - coeff * Z);
}

Classification classify_distributions(const PointGeometry& geo, double tol, int samples, unsigned long long seed) {
  Classification out;
  if (!geo.t.empty()) {
    out.t = slant_function(geo, Block::T, samples, seed, tol);
    out.invariant_ok = out.t->classification == SlantClass::Invariant;
  }
  if (!geo.perp.empty()) {
    out.perp = slant_function(geo, Block::Perp, samples, seed + 1, tol);
    out.anti_invariant_ok = out.perp->classification == SlantClass::AntiInvariant;
  }
  if (!geo.theta.empty()) {
    out.theta = slant_function(geo, Block::Theta, samples, seed + 2, tol);
    out.proper_slant_ok = out.theta->classification == SlantClass::PointwiseSlant;
  }
  const int N = static_cast<int>(geo.x.size());
  out.mu_expected = N - geo.n() - geo.perp.count - geo.theta.count;
  out.mu_actual = geo.mu.count;
  return out;
}

ReebReport reeb_placement_analysis(const ImmersionSpec& spec, const PointGeometry& geo, const WarpReport& warp,
                                   double tol) {
  ReebReport rep;
  const double xn = geo.norm(geo.xi);
  rep.normal_part = geo.norm(geo.nor_proj(geo.xi)) / xn;
  if (rep.normal_part > tol) throw GeometryError("structure vector field is not tangent to the submanifold");

  const VectorXd c = geo.param_proj * geo.xi;
  const std::vector<int> groups[3] = {warp.base, spec.fiber_indices(1), spec.fiber_indices(2)};
  for (int p = 0; p < 3; ++p) {
    VectorXd part = VectorXd::Zero(geo.x.size());
    for (int a : groups[p]) part += c(a) * geo.jacobian.col(a);
    rep.shares[p] = geo.norm(part) / xn;
  }
  rep.container = static_cast<int>(std::max_element(rep.shares, rep.shares + 3) - rep.shares);
  const int declared = spec.reeb < 0 ? 0 : spec.reeb_factor == Block::Perp ? 1 : spec.reeb_factor == Block::Theta ? 2 : 0;
  rep.declared_matches = declared == rep.container;
  rep.in_fiber = rep.container != 0;
  if (rep.in_fiber) {
    rep.obstruction = std::sqrt(warp.factor(rep.container).grad_norm2);
    rep.consistent = rep.obstruction <= tol;
    rep.status = rep.consistent ? "xi in fiber, warping function constant" : "xi in fiber, warping function not constant";
  } else {
    rep.status = "xi in the invariant factor";
  }
  return rep;
}

}  // namespace biwarp
