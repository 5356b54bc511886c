#include "biwarp/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace biwarp {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

std::vector<double> tensor_gauss_legendre(const MultiIntegrand& f, std::size_t count, std::span<const Interval> box,
                                          int order) {
  const GaussRule rule = gauss_legendre(order);
  const std::size_t dim = box.size();
  std::vector<double> out(count, 0.0), vals(count, 0.0), x(dim, 0.0);
  std::vector<int> idx(dim, 0);
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double half = 0.5 * box[k].width();
      x[k] = box[k].mid() + half * rule.nodes[static_cast<std::size_t>(idx[k])];
      w *= half * rule.weights[static_cast<std::size_t>(idx[k])];
    }
    f(x, vals);
    for (std::size_t c = 0; c < count; ++c) out[c] += w * vals[c];
    std::size_t k = 0;
    while (k < dim && ++idx[k] == order) idx[k++] = 0;
    if (k == dim) break;
  }
  return out;
}

double tensor_gauss_legendre(const Integrand& f, std::span<const Interval> box, int order) {
  return tensor_gauss_legendre([&](std::span<const double> x, std::span<double> v) { v[0] = f(x); }, 1, box,
                               order)[0];
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
double gk15(const F& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = kWgk[7] * fc, g = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double f1 = f(c - h * kXgk[static_cast<std::size_t>(j)]);
    const double f2 = f(c + h * kXgk[static_cast<std::size_t>(j)]);
    k += kWgk[static_cast<std::size_t>(j)] * (f1 + f2);
    if (j % 2 == 1) g += kWg[static_cast<std::size_t>(j / 2)] * (f1 + f2);
  }
  err = std::abs(h * (k - g));
  return h * k;
}

template <class F>
double adapt(const F& f, double a, double b, double rel_tol, int depth) {
  double err = 0.0;
  const double v = gk15(f, a, b, err);
  if (err <= rel_tol * std::abs(v) || err < 1e-300 || depth <= 0) return v;
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, rel_tol, depth - 1) + adapt(f, m, b, rel_tol, depth - 1);
}

double nested(const Integrand& f, std::span<const Interval> box, std::vector<double>& x, std::size_t axis,
              double rel_tol, int max_depth, long& evals) {
  if (axis == box.size()) {
    ++evals;
    return f(x);
  }
  auto inner = [&](double t) {
    x[axis] = t;
    return nested(f, box, x, axis + 1, rel_tol, max_depth, evals);
  };
  return adapt(inner, box[axis].lo, box[axis].hi, rel_tol, max_depth);
}

}  // namespace

AdaptiveResult adaptive_kronrod(const Integrand& f, std::span<const Interval> box, double rel_tol, int max_depth) {
  for (const Interval& iv : box) {
    if (!iv.bounded()) throw std::invalid_argument("adaptive quadrature needs a bounded box");
  }
  AdaptiveResult r;
  std::vector<double> x(box.size(), 0.0);
  r.value = nested(f, box, x, 0, rel_tol, max_depth, r.evaluations);
  return r;
}

}  // namespace biwarp
