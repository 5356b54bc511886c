#include "biwarp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "biwarp/errors.hpp"

namespace biwarp {

namespace {

constexpr double kMaxCondition = 1e8;
constexpr double kRankFloor = 1e-12;

// g-orthonormal vectors as columns, with g applied once up front.
struct Basis {
  MatrixXd B, GB;
  Basis(const MatrixXd& g, const std::vector<VectorXd>& vecs) : B(g.rows(), static_cast<Eigen::Index>(vecs.size())) {
    for (std::size_t i = 0; i < vecs.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = vecs[i];
    GB = g * B;
  }
};

VectorXd orthogonalize(const Basis& basis, VectorXd v) {
  if (basis.B.cols() == 0) return v;
  // two passes keep the frame orthonormal to round-off
  for (int pass = 0; pass < 2; ++pass) v -= basis.B * (basis.GB.transpose() * v);
  return v;
}

struct FrameBuilder {
  const MatrixXd& g;
  std::vector<VectorXd> frame;
  std::vector<VectorXd> extra;  // orthogonalized against but not part of the frame (yet)

  std::vector<VectorXd> all() const {
    std::vector<VectorXd> out = extra;
    out.insert(out.end(), frame.begin(), frame.end());
    return out;
  }

  // Pivoted Gram-Schmidt over `cols`; after each pick, `partner` (if given)
  // proposes the next vector, which is kept when it survives projection.
  int add_block(const std::vector<VectorXd>& cols, const std::function<VectorXd(const VectorXd&)>& partner,
                const std::function<VectorXd(const VectorXd&)>& within) {
    const int target = static_cast<int>(cols.size());
    std::vector<bool> used(cols.size(), false);
    int added = 0;
    while (added < target) {
      const Basis basis(g, all());
      int best = -1;
      double best_norm = 0.0;
      VectorXd best_vec;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (used[c]) continue;
        VectorXd r = orthogonalize(basis, cols[c]);
        const double nr = norm_g(g, r) / std::max(norm_g(g, cols[c]), kRankFloor);
        if (nr > best_norm) {
          best_norm = nr;
          best = static_cast<int>(c);
          best_vec = std::move(r);
        }
      }
      if (best < 0 || best_norm < 1e-10) throw GeometryError("tangent block is rank deficient");
      used[static_cast<std::size_t>(best)] = true;
      const VectorXd e = best_vec / norm_g(g, best_vec);
      frame.push_back(e);
      ++added;
      if (partner && added < target) {
        const VectorXd p = partner(e);
        const double scale = norm_g(g, p);
        if (scale > 1e-8) {
          VectorXd r = orthogonalize(Basis(g, all()), within(p));
          const double nr = norm_g(g, r);
          if (nr > 1e-6 * scale) {
            frame.push_back(r / nr);
            ++added;
          }
        }
      }
    }
    return added;
  }
};

// g-orthogonal projector onto span(cols).
std::function<VectorXd(const VectorXd&)> span_projector(const MatrixXd& g, const std::vector<VectorXd>& cols) {
  if (cols.empty()) return [](const VectorXd& v) { return VectorXd(VectorXd::Zero(v.size())); };
  MatrixXd B(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = cols[i];
  const MatrixXd P = B * (B.transpose() * g * B).ldlt().solve(B.transpose() * g);
  return [P](const VectorXd& v) { return VectorXd(P * v); };
}

}  // namespace

const Range& PointGeometry::block_range(Block b) const {
  switch (b) {
    case Block::T:
      return t;
    case Block::Perp:
      return perp;
    case Block::Theta:
      return theta;
    case Block::Reeb:
      return reeb;
  }
  return t;
}

VectorXd PointGeometry::h_apply(const VectorXd& A, const VectorXd& B) const {
  const VectorXd a = frame_coords(A);
  const VectorXd b = frame_coords(B);
  VectorXd out = VectorXd::Zero(x.size());
  for (int i = 0; i < n(); ++i) {
    if (a(i) == 0.0) continue;
    for (int j = 0; j < n(); ++j) out += a(i) * b(j) * h_frame(i, j);
  }
  return out;
}

PointGeometry point_data(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u) {
  if (spec.ambient_dim != amb.dim()) throw GeometryError("immersion and ambient dimensions differ");
  const auto jets = eval_jet2(spec, u);
  const int N = amb.dim();
  const int d = static_cast<int>(spec.dim());
  if (d > N) throw GeometryError("more parameters than ambient dimensions");

  PointGeometry geo;
  geo.u = Eigen::Map<const VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
  geo.x.resize(N);
  geo.jacobian.resize(N, d);
  geo.second.assign(static_cast<std::size_t>(d * d), VectorXd::Zero(N));
  for (int k = 0; k < N; ++k) {
    const Jet2& jk = jets[static_cast<std::size_t>(k)];
    geo.x(k) = jk.value;
    for (int a = 0; a < d; ++a) {
      geo.jacobian(k, a) = jk.grad[static_cast<std::size_t>(a)];
      for (int b = 0; b < d; ++b) {
        geo.second[static_cast<std::size_t>(a * d + b)](k) = jk.h(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      }
    }
  }
  geo.g = amb.metric(geo.x);
  geo.phi = amb.phi(geo.x);
  geo.xi = amb.xi(geo.x);
  geo.eta = amb.eta(geo.x);
  geo.gamma = amb.christoffel(geo.x);

  const Eigen::LLT<MatrixXd> llt(geo.g);
  const MatrixXd scaled = MatrixXd(llt.matrixU()) * geo.jacobian;
  const Eigen::JacobiSVD<MatrixXd> svd(scaled);
  const auto& sv = svd.singularValues();
  geo.condition = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : std::numeric_limits<double>::infinity();
  if (!(geo.condition <= kMaxCondition)) throw GeometryError("degenerate immersion: Jacobian condition number above 1e8");

  geo.induced = geo.jacobian.transpose() * geo.g * geo.jacobian;
  geo.param_proj = geo.induced.ldlt().solve(geo.jacobian.transpose() * geo.g);
  return geo;
}

PointGeometry orthonormal_frames(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u) {
  PointGeometry geo = point_data(spec, amb, u);
  const int N = amb.dim();
  const int d = static_cast<int>(spec.dim());

  auto columns = [&](Block b) {
    std::vector<VectorXd> out;
    for (int a : spec.indices(b)) out.push_back(geo.jacobian.col(a));
    return out;
  };

  FrameBuilder fb{geo.g, {}, {}};
  bool xi_tangent = false;
  if (spec.reeb >= 0) {
    const double xn = norm_g(geo.g, geo.xi);
    const VectorXd xt = geo.tan_proj(geo.xi);
    xi_tangent = norm_g(geo.g, geo.xi - xt) <= 1e-8 * xn;
    if (xi_tangent) {
      geo.xi_unit = xt / norm_g(geo.g, xt);
      fb.extra.push_back(geo.xi_unit);
    }
  }

  const auto phi_of = [&](const VectorXd& e) { return VectorXd(geo.phi * e); };
  const auto t_of = [&](const VectorXd& e) { return geo.tan_proj(geo.phi * e); };

  const auto t_cols = columns(Block::T);
  geo.t = {0, fb.add_block(t_cols, phi_of, span_projector(geo.g, t_cols))};

  geo.reeb = {geo.t.end(), 0};
  if (spec.reeb >= 0) {
    if (xi_tangent) {
      fb.frame.push_back(geo.xi_unit);
      fb.extra.clear();
    } else {
      VectorXd r = orthogonalize(Basis(geo.g, fb.all()), geo.jacobian.col(spec.reeb));
      fb.frame.push_back(r / norm_g(geo.g, r));
    }
    geo.reeb.count = 1;
  }

  const auto perp_cols = columns(Block::Perp);
  geo.perp = {geo.reeb.end(), fb.add_block(perp_cols, nullptr, nullptr)};
  const auto theta_cols = columns(Block::Theta);
  geo.theta = {geo.perp.end(), fb.add_block(theta_cols, t_of, span_projector(geo.g, theta_cols))};

  geo.tangent.resize(N, d);
  for (int i = 0; i < d; ++i) geo.tangent.col(i) = fb.frame[static_cast<std::size_t>(i)];
  geo.coeff = geo.param_proj * geo.tangent;

  // normal frame
  std::vector<VectorXd> nor;
  std::vector<VectorXd> against(fb.frame.begin(), fb.frame.end());
  auto push_normal = [&](const VectorXd& v, double floor) {
    VectorXd r = orthogonalize(Basis(geo.g, against), geo.nor_proj(v));
    const double nr = norm_g(geo.g, r);
    if (nr <= floor) return false;
    r /= nr;
    nor.push_back(r);
    against.push_back(r);
    return true;
  };
  geo.phi_perp.begin = 0;
  for (int i = geo.perp.begin; i < geo.perp.end(); ++i) {
    const VectorXd p = geo.phi * geo.tangent.col(i);
    if (push_normal(p, 1e-8 * std::max(1.0, norm_g(geo.g, p)))) ++geo.phi_perp.count;
  }
  geo.f_theta.begin = geo.phi_perp.end();
  for (int i = geo.theta.begin; i < geo.theta.end(); ++i) {
    const VectorXd p = geo.phi * geo.tangent.col(i);
    if (push_normal(p, 1e-8 * std::max(1.0, norm_g(geo.g, p)))) ++geo.f_theta.count;
  }
  geo.mu.begin = geo.f_theta.end();
  while (static_cast<int>(nor.size()) < N - d) {
    int best = -1;
    double best_norm = 0.0;
    const Basis basis(geo.g, against);
    const MatrixXd axes = MatrixXd::Identity(N, N) - geo.jacobian * geo.param_proj;  // normal parts of the axes
    for (int k = 0; k < N; ++k) {
      VectorXd r = orthogonalize(basis, axes.col(k));
      const double nr = norm_g(geo.g, r);
      if (nr > best_norm) {
        best_norm = nr;
        best = k;
      }
    }
    if (best < 0 || !push_normal(VectorXd::Unit(N, best), 1e-10)) {
      throw GeometryError("normal frame completion failed");
    }
    ++geo.mu.count;
  }
  geo.normal.resize(N, N - d);
  for (int r = 0; r < N - d; ++r) geo.normal.col(r) = nor[static_cast<std::size_t>(r)];
  return geo;
}

void second_fundamental_form(PointGeometry& geo) {
  const int d = static_cast<int>(geo.jacobian.cols());
  const int n = geo.n();
  std::vector<VectorXd> hab(static_cast<std::size_t>(d * d));
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      const VectorXd K = geo.second[static_cast<std::size_t>(a * d + b)] +
                         AmbientStructure::contract(geo.gamma, geo.jacobian.col(a), geo.jacobian.col(b));
      hab[static_cast<std::size_t>(a * d + b)] = geo.nor_proj(K);
      hab[static_cast<std::size_t>(b * d + a)] = hab[static_cast<std::size_t>(a * d + b)];
    }
  }
  geo.hv.assign(static_cast<std::size_t>(n * n), VectorXd::Zero(geo.x.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      VectorXd acc = VectorXd::Zero(geo.x.size());
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          const double c = geo.coeff(a, i) * geo.coeff(b, j);
          if (c != 0.0) acc += c * hab[static_cast<std::size_t>(a * d + b)];
        }
      }
      geo.hv[static_cast<std::size_t>(i * n + j)] = acc;
      geo.hv[static_cast<std::size_t>(j * n + i)] = acc;
    }
  }
  const int q = geo.codim();
  geo.h.assign(static_cast<std::size_t>(q), MatrixXd::Zero(n, n));
  const MatrixXd gnu = geo.g * geo.normal;
  geo.h_norm2 = 0.0;
  geo.mean_curvature = VectorXd::Zero(geo.x.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const VectorXd comps = gnu.transpose() * geo.h_frame(i, j);
      for (int r = 0; r < q; ++r) {
        geo.h[static_cast<std::size_t>(r)](i, j) = comps(r);
        geo.h_norm2 += comps(r) * comps(r);
      }
    }
    geo.mean_curvature += geo.h_frame(i, i);
  }
  if (n > 0) geo.mean_curvature /= n;
  geo.has_h = true;
}

PointGeometry compute_geometry(const ImmersionSpec& spec, const AmbientStructure& amb, std::span<const double> u) {
  PointGeometry geo = orthonormal_frames(spec, amb, u);
  second_fundamental_form(geo);
  return geo;
}

MatrixXd shape_operator(const PointGeometry& geo, const VectorXd& N, double tol) {
  if (!geo.has_h) throw GeometryError("second fundamental form not computed");
  const double tangential = geo.norm(geo.tan_proj(N));
  if (tangential > tol * std::max(1.0, geo.norm(N))) {
    throw GeometryError("shape operator needs a normal vector");
  }
  const VectorXd nr = geo.normal.transpose() * (geo.g * N);
  MatrixXd A = MatrixXd::Zero(geo.n(), geo.n());
  for (int r = 0; r < geo.codim(); ++r) A += nr(r) * geo.h[static_cast<std::size_t>(r)];
  return A;
}

TFDecomposition tf_decompose(const PointGeometry& geo, const VectorXd& V) {
  const VectorXd pv = geo.phi * V;
  TFDecomposition out;
  out.tangential = geo.tan_proj(pv);
  out.normal = pv - out.tangential;
  return out;
}

const char* to_string(SlantClass c) {
  switch (c) {
    case SlantClass::Invariant:
      return "invariant";
    case SlantClass::AntiInvariant:
      return "anti-invariant";
    case SlantClass::PointwiseSlant:
      return "pointwise-slant";
    case SlantClass::NotSlant:
      return "not-slant";
  }
  return "?";
}

namespace {

VectorXd remove_xi(const PointGeometry& geo, VectorXd X) {
  if (geo.xi_unit.size() > 0) X -= geo.inner(X, geo.xi_unit) * geo.xi_unit;
  return X;
}

}  // namespace

SlantReport slant_function(const PointGeometry& geo, Block block, int samples, unsigned long long seed, double tol) {
  const Range& r = geo.block_range(block);
  if (r.empty()) throw GeometryError(std::string("slant function of empty block ") + to_string(block));
  SlantReport rep;
  rep.block = block;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const MatrixXd E = geo.slice(r);

  double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin;
  double tmin = cmin, tmax = -cmin, csum = 0.0;
  std::vector<VectorXd> dirs;
  for (int s = 0; s < samples; ++s) {
    VectorXd X;
    for (;;) {
      VectorXd c(r.count);
      for (int k = 0; k < r.count; ++k) c(k) = normal(rng);
      X = remove_xi(geo, E * c);
      if (geo.norm(X) >= 1e-12) break;
      ++rep.resampled;
    }
    X /= geo.norm(X);
    dirs.push_back(X);
    const auto tf = tf_decompose(geo, X);
    const double phin = geo.norm(tf.tangential + tf.normal);
    const double tn = geo.norm(tf.tangential) / phin;
    const double fn = geo.norm(tf.normal) / phin;
    rep.max_tangential = std::max(rep.max_tangential, tn);
    rep.max_normal = std::max(rep.max_normal, fn);
    double c = tn;
    if (c > 1.0 + 1e-12) rep.warnings.push_back("slant cosine above 1 clamped");
    c = std::clamp(c, 0.0, 1.0);
    const double th = std::acos(c);
    rep.cosines.push_back(c);
    rep.angles.push_back(th);
    csum += c;
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
    tmin = std::min(tmin, th);
    tmax = std::max(tmax, th);
  }
  rep.cos_mean = csum / samples;
  rep.theta = std::acos(std::clamp(rep.cos_mean, 0.0, 1.0));
  rep.cos_deviation = cmax - cmin;
  rep.max_deviation = tmax - tmin;

  const double c2 = rep.cos_mean * rep.cos_mean;
  for (const VectorXd& X : dirs) {
    const VectorXd TX = tf_decompose(geo, X).tangential;
    const VectorXd TTX = tf_decompose(geo, TX).tangential;
    const VectorXd res = TTX + c2 * (X - geo.eta.dot(X) * geo.xi);
    rep.t2_residual = std::max(rep.t2_residual, geo.norm(res));
  }

  if (rep.max_normal <= tol) {
    rep.classification = SlantClass::Invariant;
  } else if (rep.max_tangential <= tol) {
    rep.classification = SlantClass::AntiInvariant;
  } else if (rep.max_deviation <= tol) {
    rep.classification = SlantClass::PointwiseSlant;
  } else {
    rep.classification = SlantClass::NotSlant;
  }
  return rep;
}

std::vector<std::pair<std::string, double>> slant_algebra_checks(const PointGeometry& geo, Block block,
                                                                 double cos_theta, int samples,
                                                                 unsigned long long seed) {
  const Range& r = geo.block_range(block);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd E = geo.slice(r);
  if (geo.xi_unit.size() > 0) {
    E.conservativeResize(Eigen::NoChange, E.cols() + 1);
    E.col(E.cols() - 1) = geo.xi_unit;
  }
  auto draw = [&] {
    for (;;) {
      VectorXd c(E.cols());
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = normal(rng);
      VectorXd X = E * c;
      const double nx = geo.norm(X);
      if (nx >= 1e-12) return VectorXd(X / nx);
    }
  };
  const double c2 = cos_theta * cos_theta;
  const double s2 = 1.0 - c2;
  double tt = 0.0, ff = 0.0, tf_res = 0.0, ff_res = 0.0;
  for (int s = 0; s < samples; ++s) {
    const VectorXd X = draw();
    const VectorXd Y = draw();
    const auto dx = tf_decompose(geo, X);
    const auto dy = tf_decompose(geo, Y);
    const double base = geo.inner(X, Y) - geo.eta.dot(X) * geo.eta.dot(Y);
    tt = std::max(tt, std::abs(geo.inner(dx.tangential, dy.tangential) - c2 * base));
    ff = std::max(ff, std::abs(geo.inner(dx.normal, dy.normal) - s2 * base));
    const auto dfx = tf_decompose(geo, dx.normal);
    tf_res = std::max(tf_res, geo.norm(dfx.tangential - s2 * (-X + geo.eta.dot(X) * geo.xi)));
    const VectorXd FTX = tf_decompose(geo, dx.tangential).normal;
    ff_res = std::max(ff_res, geo.norm(dfx.normal + FTX));
  }
  return {{"tt_metric", tt}, {"ff_metric", ff}, {"tF", tf_res}, {"fF", ff_res}};
}

}  // namespace biwarp
