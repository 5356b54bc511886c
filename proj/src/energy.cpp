#include "biwarp/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biwarp/errors.hpp"
#include "biwarp/geometry.hpp"
#include "biwarp/quadrature.hpp"
#include "biwarp/warp.hpp"

namespace biwarp {

namespace {

struct Sample {
  double vol = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double h2 = 0.0;
  double c2 = 0.0;
};

Sample sample_at(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u, bool need_h) {
  PointGeometry geo = need_h ? compute_geometry(spec, amb, u) : point_data(spec, amb, u);
  const WarpReport warp = analyze_warp(spec, amb, geo, 1e-8, false);
  Sample s;
  s.vol = std::sqrt(warp.base_block.determinant());
  s.g1 = warp.f1.grad_norm2;
  s.g2 = warp.f2.grad_norm2;
  s.h2 = geo.h_norm2;
  if (!geo.theta.empty()) {
    const auto tf = tf_decompose(geo, geo.tangent.col(geo.theta.begin));
    const double c = std::min(1.0, geo.norm(tf.tangential) / geo.norm(tf.tangential + tf.normal));
    s.c2 = c * c;
  }
  return s;
}

double relative(double a, double b) {
  const double scale = std::abs(b) < 1e-14 ? 1.0 : std::abs(b);
  return std::abs(a - b) / scale;
}

}  // namespace

double dirichlet_energy(const std::function<VectorXd(std::span<const double>)>& gradient,
                        const std::function<MatrixXd(std::span<const double>)>& metric,
                        std::span<const Interval> box, int order) {
  if (order < 2) throw std::invalid_argument("quadrature order must be at least 2");
  return tensor_gauss_legendre(
      [&](std::span<const double> x) {
        const VectorXd d = gradient(x);
        const MatrixXd G = metric(x);
        return 0.5 * d.dot(G.ldlt().solve(d)) * std::sqrt(G.determinant());
      },
      box, order);
}

EnergyReport dirichlet_energy_bound(const ImmersionSpec& spec, const AmbientStructure& amb,
                                    std::span<const Interval> box, std::span<const double> point, int order,
                                    bool with_oracle) {
  if (order < 2) throw std::invalid_argument("quadrature order must be at least 2");
  EnergyReport rep;
  rep.base = spec.base_indices();
  if (box.size() != rep.base.size()) throw std::invalid_argument("energy box must cover every base coordinate");
  for (const Interval& iv : box) {
    if (!iv.bounded() || !(iv.lo < iv.hi)) throw std::invalid_argument("energy box must be bounded");
  }
  if (point.size() != spec.dim()) throw std::invalid_argument("fiber point has the wrong dimension");
  rep.box.assign(box.begin(), box.end());
  rep.fiber_point.assign(point.begin(), point.end());
  rep.order = order;
  rep.n1 = static_cast<int>(spec.indices(Block::Perp).size());
  rep.n2 = static_cast<int>(spec.indices(Block::Theta).size());

  auto full_point = [&](std::span<const double> b) {
    std::vector<double> p = rep.fiber_point;
    for (std::size_t i = 0; i < rep.base.size(); ++i) p[static_cast<std::size_t>(rep.base[i])] = b[i];
    return p;
  };

  const int n1 = rep.n1, n2 = rep.n2;
  const MultiIntegrand integrand = [&](std::span<const double> b, std::span<double> out) {
    const auto p = full_point(b);
    const Sample s = sample_at(spec, amb, p, true);
    out[0] = s.vol;
    out[1] = 0.5 * s.g1 * s.vol;
    out[2] = 0.5 * s.g2 * s.vol;
    out[3] = n2 > 0 ? 0.5 * (1.0 + s.c2) / (1.0 - s.c2) * s.g2 * s.vol : 0.0;  // csc^2 + cot^2
    out[4] = s.h2 * s.vol;
    out[5] = 0.5 * (n1 + n2 * (1.0 + s.c2 * s.c2)) * s.vol;
  };

  const auto q = tensor_gauss_legendre(integrand, 6, box, order);
  rep.volume = q[0];
  rep.E1 = q[1];
  rep.E2 = q[2];
  rep.slant_weighted_E2 = q[3];
  rep.h_integral = q[4];
  rep.constant_integral = q[5];
  rep.lhs = n1 * rep.E1 + n2 * rep.slant_weighted_E2;
  rep.rhs = 0.25 * rep.h_integral - rep.constant_integral;
  rep.slack = rep.rhs - rep.lhs;
  if (n2 == 0 && n1 > 0) {
    rep.corollary = "contact_cr";
    rep.corollary_slack = rep.h_integral / (4.0 * n1) - 0.5 * rep.volume - rep.E1;
  } else if (n1 == 0 && n2 > 0) {
    rep.corollary = "semi_slant";
    rep.corollary_slack = rep.h_integral / (4.0 * n2) - rep.constant_integral / n2 - rep.slant_weighted_E2;
  }

  const auto q2 = tensor_gauss_legendre(
      [&](std::span<const double> b, std::span<double> out) {
        const Sample s = sample_at(spec, amb, full_point(b), false);
        out[0] = 0.5 * s.g1 * s.vol;
        out[1] = 0.5 * s.g2 * s.vol;
      },
      2, box, 2 * order);
  rep.E1_doubled = q2[0];
  rep.E2_doubled = q2[1];
  rep.doubling_change = std::max(relative(rep.E1, rep.E1_doubled), relative(rep.E2, rep.E2_doubled));

  if (with_oracle) {
    auto oracle = [&](int which) {
      return adaptive_kronrod(
                 [&](std::span<const double> b) {
                   const Sample s = sample_at(spec, amb, full_point(b), false);
                   return 0.5 * (which == 1 ? s.g1 : s.g2) * s.vol;
                 },
                 box, 1e-10)
          .value;
    };
    rep.E1_oracle = n1 > 0 ? oracle(1) : 0.0;
    rep.E2_oracle = n2 > 0 ? oracle(2) : 0.0;
    rep.oracle_gap = std::max(relative(rep.E1, rep.E1_oracle), relative(rep.E2, rep.E2_oracle));
  }
  return rep;
}

}  // namespace biwarp
