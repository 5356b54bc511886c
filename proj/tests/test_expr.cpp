#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "biwarp/errors.hpp"
#include "biwarp/expr.hpp"

using namespace biwarp;

namespace {

SymbolTable uv() { return SymbolTable{{"u", "v"}, {}}; }

}  // namespace

TEST_CASE("product jet") {
  const Expression e = Expression::parse("u*v", uv());
  const std::vector<double> x{2.0, 3.0};
  const Jet2 j = e.jet(x);
  CHECK(j.value == doctest::Approx(6.0));
  CHECK(j.grad[0] == doctest::Approx(3.0));
  CHECK(j.grad[1] == doctest::Approx(2.0));
  CHECK(j.h(0, 0) == 0.0);
  CHECK(j.h(0, 1) == doctest::Approx(1.0));
  CHECK(j.h(1, 0) == doctest::Approx(1.0));
  CHECK(j.h(1, 1) == 0.0);
}

TEST_CASE("half square jet") {
  const Expression e = Expression::parse("t^2/2", SymbolTable{{"t"}, {}});
  const std::vector<double> x{0.7};
  const Jet2 j = e.jet(x);
  CHECK(j.value == doctest::Approx(0.245));
  CHECK(j.grad[0] == doctest::Approx(0.7));
  CHECK(j.h(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("sqrt jet at a critical point") {
  const Expression e = Expression::parse("sqrt(1+r^2+s^2)", SymbolTable{{"r", "s"}, {}});
  const std::vector<double> x{0.0, 0.0};
  const Jet2 j = e.jet(x);
  CHECK(j.value == doctest::Approx(1.0));
  CHECK(j.grad[0] == doctest::Approx(0.0));
  CHECK(j.grad[1] == doctest::Approx(0.0));
  CHECK(j.h(0, 0) == doctest::Approx(1.0));
  CHECK(j.h(1, 1) == doctest::Approx(1.0));
  CHECK(j.h(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("operator precedence and unary minus") {
  const SymbolTable s{{"t"}, {{"theta0", 0.25}}};
  const std::vector<double> x{2.0};
  CHECK(Expression::parse("-t^2", s).eval(x) == doctest::Approx(-4.0));
  CHECK(Expression::parse("2^3^2", s).eval(x) == doctest::Approx(512.0));
  CHECK(Expression::parse("1-2-3", s).eval(x) == doctest::Approx(-4.0));
  CHECK(Expression::parse("8/2/2", s).eval(x) == doctest::Approx(2.0));
  CHECK(Expression::parse("-t^2*cos(theta0)/2", s).eval(x) == doctest::Approx(-2.0 * std::cos(0.25)));
  CHECK(Expression::parse("pi", s).eval(x) == doctest::Approx(std::numbers::pi));
  CHECK(Expression::parse("1.5e-1*t", s).eval(x) == doctest::Approx(0.3));
}

TEST_CASE("syntax errors carry a column") {
  const SymbolTable s = uv();
  try {
    (void)Expression::parse("u + * v", s);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 5);
  }
  try {
    (void)Expression::parse("u + w", s);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.column() == 5);
    CHECK(std::string(e.what()).find("'w'") != std::string::npos);
  }
  CHECK_THROWS_AS((void)Expression::parse("(u", s), ParseError);
  CHECK_THROWS_AS((void)Expression::parse("u)", s), ParseError);
  CHECK_THROWS_AS((void)Expression::parse("", s), ParseError);
  CHECK_THROWS_AS((void)Expression::parse("foo(u)", s), ParseError);
}

TEST_CASE("domain validation") {
  const SymbolTable s{{"r"}, {}};
  const std::vector<Interval> pos{{0.1, 1.0}};
  const std::vector<Interval> span0{{-1.0, 1.0}};
  CHECK_NOTHROW(Expression::parse("sqrt(r)", s).validate_on(pos));
  CHECK_THROWS(Expression::parse("sqrt(r)", s).validate_on(span0));
  CHECK_THROWS(Expression::parse("log(r)", s).validate_on(span0));
  CHECK_THROWS(Expression::parse("1/r", s).validate_on(span0));
  CHECK_NOTHROW(Expression::parse("sqrt(1+r^2)", s).validate_on(span0));
  const Interval r = Expression::parse("r^2", s).range(span0);
  CHECK(r.lo <= 0.0);
  CHECK(r.hi >= 1.0);
}

TEST_CASE("jets agree with central differences") {
  const SymbolTable s{{"a", "b", "c"}, {}};
  const char* texts[] = {"sin(a)*cos(b)+exp(c)", "sqrt(1+a^2+b*c)", "log(2+a*b)/(1+c^2)", "tan(a/3)-b^3*c",
                         "(a+b)^2.5"};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.2, 0.9);
  for (const char* t : texts) {
    const Expression e = Expression::parse(t, s);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x{U(rng), U(rng), U(rng)};
      const Jet2 j = e.jet(x);
      CHECK(j.value == doctest::Approx(e.eval(x)).epsilon(1e-14));
      const double hstep = 1e-4;
      for (int i = 0; i < 3; ++i) {
        auto xp = x, xm = x;
        xp[i] += hstep;
        xm[i] -= hstep;
        const double fd = (e.eval(xp) - e.eval(xm)) / (2 * hstep);
        CHECK(std::abs(fd - j.grad[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
        for (int k = 0; k < 3; ++k) {
          auto pp = x, pm = x, mp = x, mm = x;
          pp[i] += hstep; pp[k] += hstep;
          pm[i] += hstep; pm[k] -= hstep;
          mp[i] -= hstep; mp[k] += hstep;
          mm[i] -= hstep; mm[k] -= hstep;
          const double fd2 = (e.eval(pp) - e.eval(pm) - e.eval(mp) + e.eval(mm)) / (4 * hstep * hstep);
          CHECK(std::abs(fd2 - j.h(i, k)) <= 1e-5 * std::max(1.0, std::abs(fd2)));
        }
      }
    }
  }
}

TEST_CASE("to_string round trip") {
  const SymbolTable s{{"u", "v"}, {{"k", 1.25}}};
  const std::vector<std::string> names{"u", "v"};
  const char* texts[] = {"-u^2*cos(k)/2", "sqrt(u^2+v^2+2*k^2)", "u-(v-1)", "u^-2", "exp(-u)/log(3+v)",
                         "0.1+1e-3*u*v"};
  const std::vector<double> x{1.3, 0.4};
  for (const char* t : texts) {
    const Expression e = Expression::parse(t, s);
    const std::string once = e.to_string(names);
    const Expression back = Expression::parse(once, SymbolTable{{"u", "v"}, {}});
    CHECK(back.to_string(names) == once);
    CHECK(back.eval(x) == e.eval(x));
  }
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = U(rng) / (1 + i);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("parameters are collected") {
  const SymbolTable s{{"a", "b", "c"}, {{"k", 2.0}}};
  CHECK(Expression::parse("c*k+a*c", s).parameters() == std::vector<int>{0, 2});
  CHECK(Expression::parse("k", s).parameters().empty());
}
