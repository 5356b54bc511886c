#include "biwarp/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "biwarp/errors.hpp"

namespace biwarp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0, int param = -1) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = value;
  n->param = param;
  return n;
}

bool is_integer(double p) { return std::isfinite(p) && std::floor(p) == p && std::abs(p) < 1e9; }

double eval_of(const ExprNode& n, std::span<const double> x);
void collect(const ExprNode& n, std::set<int>& out);

// ---------------------------------------------------------------- parser

class Parser {
 public:
  Parser(std::string_view text, const SymbolTable& symbols) : text_(text), symbols_(symbols) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    NodePtr n = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ParseError(what, 1, static_cast<int>(at) + 1);
  }
  [[noreturn]] void fail(const std::string& what) const { fail(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = make_node(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_node(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_node(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    skip_ws();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    NodePtr exponent = parse_unary();
    std::set<int> used;
    collect(*exponent, used);
    if (!used.empty()) fail("exponent must not depend on parameters", at);
    const double p = eval_of(*exponent, {});
    if (!std::isfinite(p)) fail("exponent is not finite", at);
    return make_node(Op::Pow, base, nullptr, p);
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        pos_ = q;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto* first = text_.data() + start;
    const auto* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("malformed number", start);
    return make_node(Op::Constant, nullptr, nullptr, v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));

    static const std::array<std::pair<const char*, Op>, 6> functions{{{"sin", Op::Sin},
                                                                       {"cos", Op::Cos},
                                                                       {"tan", Op::Tan},
                                                                       {"sqrt", Op::Sqrt},
                                                                       {"exp", Op::Exp},
                                                                       {"log", Op::Log}}};
    for (const auto& [fname, op] : functions) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after " + name);
        NodePtr arg = parse_sum();
        if (!accept(')')) fail("expected ')'");
        return make_node(op, arg);
      }
    }
    if (const int idx = symbols_.param_index(name); idx >= 0) {
      return make_node(Op::Parameter, nullptr, nullptr, 0.0, idx);
    }
    if (auto it = symbols_.constants.find(name); it != symbols_.constants.end()) {
      return make_node(Op::Constant, nullptr, nullptr, it->second);
    }
    if (name == "pi") return make_node(Op::Constant, nullptr, nullptr, std::numbers::pi);
    fail("undeclared symbol '" + name + "'", start);
  }

  std::string_view text_;
  const SymbolTable& symbols_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- jets

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite intermediate in ") + what);
}

// f(a) given f, f', f'' at a.value
Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  Jet2 out(a.dim(), f0);
  const std::size_t d = a.dim();
  for (std::size_t i = 0; i < d; ++i) out.grad[i] = f1 * a.grad[i];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.hess[i * d + j] = f1 * a.hess[i * d + j] + f2 * a.grad[i] * a.grad[j];
    }
  }
  return out;
}

Jet2 add(const Jet2& a, const Jet2& b, double sign) {
  Jet2 out(a.dim(), a.value + sign * b.value);
  for (std::size_t i = 0; i < a.grad.size(); ++i) out.grad[i] = a.grad[i] + sign * b.grad[i];
  for (std::size_t i = 0; i < a.hess.size(); ++i) out.hess[i] = a.hess[i] + sign * b.hess[i];
  return out;
}

Jet2 mul(const Jet2& a, const Jet2& b) {
  const std::size_t d = a.dim();
  Jet2 out(d, a.value * b.value);
  for (std::size_t i = 0; i < d; ++i) out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.hess[i * d + j] = a.value * b.hess[i * d + j] + b.value * a.hess[i * d + j] +
                            a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j];
    }
  }
  return out;
}

Jet2 power(const Jet2& a, double p) {
  const double x = a.value;
  if (p == 0.0) return Jet2(a.dim(), 1.0);
  if (!is_integer(p) && x <= 0.0) throw DomainError("fractional power of non-positive base");
  const double f0 = std::pow(x, p);
  const double f1 = (p == 1.0) ? 1.0 : p * std::pow(x, p - 1.0);
  const double f2 = (p == 1.0 || p == 2.0) ? (p == 2.0 ? 2.0 : 0.0) : p * (p - 1.0) * std::pow(x, p - 2.0);
  return chain(a, f0, f1, f2);
}

Jet2 jet_of(const ExprNode& n, std::span<const double> x) {
  const std::size_t d = x.size();
  Jet2 out;
  switch (n.op) {
    case Op::Constant:
      return Jet2(d, n.value);
    case Op::Parameter:
      return Jet2::variable(d, static_cast<std::size_t>(n.param), x[static_cast<std::size_t>(n.param)]);
    case Op::Neg: {
      out = jet_of(*n.a, x);
      out.value = -out.value;
      for (auto& g : out.grad) g = -g;
      for (auto& h : out.hess) h = -h;
      return out;
    }
    case Op::Add:
      out = add(jet_of(*n.a, x), jet_of(*n.b, x), 1.0);
      break;
    case Op::Sub:
      out = add(jet_of(*n.a, x), jet_of(*n.b, x), -1.0);
      break;
    case Op::Mul:
      out = mul(jet_of(*n.a, x), jet_of(*n.b, x));
      break;
    case Op::Div: {
      const Jet2 den = jet_of(*n.b, x);
      if (den.value == 0.0) throw DomainError("division by zero");
      const double r = 1.0 / den.value;
      out = mul(jet_of(*n.a, x), chain(den, r, -r * r, 2.0 * r * r * r));
      break;
    }
    case Op::Pow:
      out = power(jet_of(*n.a, x), n.value);
      break;
    case Op::Sin: {
      const Jet2 a = jet_of(*n.a, x);
      const double s = std::sin(a.value), c = std::cos(a.value);
      out = chain(a, s, c, -s);
      break;
    }
    case Op::Cos: {
      const Jet2 a = jet_of(*n.a, x);
      const double s = std::sin(a.value), c = std::cos(a.value);
      out = chain(a, c, -s, -c);
      break;
    }
    case Op::Tan: {
      const Jet2 a = jet_of(*n.a, x);
      const double t = std::tan(a.value);
      const double sec2 = 1.0 + t * t;
      out = chain(a, t, sec2, 2.0 * t * sec2);
      break;
    }
    case Op::Sqrt: {
      const Jet2 a = jet_of(*n.a, x);
      if (a.value <= 0.0) throw DomainError("sqrt of non-positive value");
      const double s = std::sqrt(a.value);
      out = chain(a, s, 0.5 / s, -0.25 / (s * a.value));
      break;
    }
    case Op::Exp: {
      const Jet2 a = jet_of(*n.a, x);
      const double e = std::exp(a.value);
      out = chain(a, e, e, e);
      break;
    }
    case Op::Log: {
      const Jet2 a = jet_of(*n.a, x);
      if (a.value <= 0.0) throw DomainError("log of non-positive value");
      const double r = 1.0 / a.value;
      out = chain(a, std::log(a.value), r, -r * r);
      break;
    }
  }
  check_finite(out.value, "expression value");
  for (double g : out.grad) check_finite(g, "gradient");
  for (double h : out.hess) check_finite(h, "Hessian");
  return out;
}

double eval_of(const ExprNode& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Constant:
      return n.value;
    case Op::Parameter:
      return x[static_cast<std::size_t>(n.param)];
    case Op::Neg:
      return -eval_of(*n.a, x);
    case Op::Add:
      return eval_of(*n.a, x) + eval_of(*n.b, x);
    case Op::Sub:
      return eval_of(*n.a, x) - eval_of(*n.b, x);
    case Op::Mul:
      return eval_of(*n.a, x) * eval_of(*n.b, x);
    case Op::Div:
      return eval_of(*n.a, x) / eval_of(*n.b, x);
    case Op::Pow:
      return n.value == 0.0 ? 1.0 : std::pow(eval_of(*n.a, x), n.value);
    case Op::Sin:
      return std::sin(eval_of(*n.a, x));
    case Op::Cos:
      return std::cos(eval_of(*n.a, x));
    case Op::Tan:
      return std::tan(eval_of(*n.a, x));
    case Op::Sqrt:
      return std::sqrt(eval_of(*n.a, x));
    case Op::Exp:
      return std::exp(eval_of(*n.a, x));
    case Op::Log:
      return std::log(eval_of(*n.a, x));
  }
  return 0.0;
}

// ---------------------------------------------------------------- intervals

Interval whole() { return {-kInf, kInf}; }

Interval sanitize(Interval r) {
  if (std::isnan(r.lo) || std::isnan(r.hi)) return whole();
  return r;
}

Interval imul(Interval a, Interval b) {
  const std::array<double, 4> p{a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  for (double v : p) {
    if (std::isnan(v)) return whole();
  }
  return {*std::min_element(p.begin(), p.end()), *std::max_element(p.begin(), p.end())};
}

Interval ipow_int(Interval a, long n) {
  if (n == 0) return {1.0, 1.0};
  if (n < 0) {
    const Interval pos = ipow_int(a, -n);
    return {1.0 / pos.hi, 1.0 / pos.lo};
  }
  const double lo = std::pow(a.lo, static_cast<double>(n));
  const double hi = std::pow(a.hi, static_cast<double>(n));
  if (n % 2 == 1) return {lo, hi};
  if (a.lo >= 0.0) return {lo, hi};
  if (a.hi <= 0.0) return {hi, lo};
  return {0.0, std::max(lo, hi)};
}

// sin over [lo, hi]
Interval isin(Interval a) {
  if (!a.bounded() || a.width() >= 2.0 * std::numbers::pi) return {-1.0, 1.0};
  double lo = std::min(std::sin(a.lo), std::sin(a.hi));
  double hi = std::max(std::sin(a.lo), std::sin(a.hi));
  const double half_pi = 0.5 * std::numbers::pi;
  // peaks at pi/2 + 2k pi, troughs at -pi/2 + 2k pi
  const double k_peak = std::ceil((a.lo - half_pi) / (2.0 * std::numbers::pi));
  if (half_pi + 2.0 * std::numbers::pi * k_peak <= a.hi) hi = 1.0;
  const double k_trough = std::ceil((a.lo + half_pi) / (2.0 * std::numbers::pi));
  if (-half_pi + 2.0 * std::numbers::pi * k_trough <= a.hi) lo = -1.0;
  return {lo, hi};
}

struct Validator {
  std::span<const Interval> box;

  [[noreturn]] static void reject(const std::string& why) {
    throw ParseError(why + " on the declared domain");
  }

  Interval range(const ExprNode& n, bool strict) const {
    switch (n.op) {
      case Op::Constant:
        return {n.value, n.value};
      case Op::Parameter:
        return box[static_cast<std::size_t>(n.param)];
      case Op::Neg: {
        const Interval a = range(*n.a, strict);
        return {-a.hi, -a.lo};
      }
      case Op::Add: {
        const Interval a = range(*n.a, strict), b = range(*n.b, strict);
        return sanitize({a.lo + b.lo, a.hi + b.hi});
      }
      case Op::Sub: {
        const Interval a = range(*n.a, strict), b = range(*n.b, strict);
        return sanitize({a.lo - b.hi, a.hi - b.lo});
      }
      case Op::Mul:
        return imul(range(*n.a, strict), range(*n.b, strict));
      case Op::Div: {
        const Interval a = range(*n.a, strict), b = range(*n.b, strict);
        if (b.lo <= 0.0 && b.hi >= 0.0) {
          if (strict) reject("denominator may vanish");
          return whole();
        }
        return imul(a, {1.0 / b.hi, 1.0 / b.lo});
      }
      case Op::Pow: {
        const Interval a = range(*n.a, strict);
        if (is_integer(n.value)) {
          if (n.value < 0 && a.lo <= 0.0 && a.hi >= 0.0) {
            if (strict) reject("negative power of a base that may vanish");
            return whole();
          }
          return sanitize(ipow_int(a, static_cast<long>(n.value)));
        }
        if (a.lo <= 0.0) {
          if (strict) reject("non-integer power of a base that may be non-positive");
          return whole();
        }
        const double lo = std::pow(a.lo, n.value), hi = std::pow(a.hi, n.value);
        return {std::min(lo, hi), std::max(lo, hi)};
      }
      case Op::Sin:
        return isin(range(*n.a, strict));
      case Op::Cos: {
        const Interval a = range(*n.a, strict);
        const double s = 0.5 * std::numbers::pi;
        return isin({a.lo + s, a.hi + s});
      }
      case Op::Tan: {
        const Interval a = range(*n.a, strict);
        const double half_pi = 0.5 * std::numbers::pi;
        const double k = std::ceil((a.lo - half_pi) / std::numbers::pi);
        if (!a.bounded() || half_pi + std::numbers::pi * k <= a.hi) {
          if (strict) reject("tan argument may cross a pole");
          return whole();
        }
        return {std::tan(a.lo), std::tan(a.hi)};
      }
      case Op::Sqrt: {
        const Interval a = range(*n.a, strict);
        if (a.lo <= 0.0) {
          if (strict) reject("sqrt argument may be non-positive");
          return {0.0, std::sqrt(std::max(a.hi, 0.0))};
        }
        return {std::sqrt(a.lo), std::sqrt(a.hi)};
      }
      case Op::Exp: {
        const Interval a = range(*n.a, strict);
        return {std::exp(a.lo), std::exp(a.hi)};
      }
      case Op::Log: {
        const Interval a = range(*n.a, strict);
        if (a.lo <= 0.0) {
          if (strict) reject("log argument may be non-positive");
          return {-kInf, a.hi > 0.0 ? std::log(a.hi) : -kInf};
        }
        return {std::log(a.lo), std::log(a.hi)};
      }
    }
    return whole();
  }
};

// ---------------------------------------------------------------- printing

void print(const ExprNode& n, std::span<const std::string> names, std::string& out) {
  auto binary = [&](const char* sym) {
    out += '(';
    print(*n.a, names, out);
    out += sym;
    print(*n.b, names, out);
    out += ')';
  };
  auto unary = [&](const char* fname) {
    out += fname;
    out += '(';
    print(*n.a, names, out);
    out += ')';
  };
  switch (n.op) {
    case Op::Constant:
      if (n.value < 0.0 || std::signbit(n.value)) {
        out += "(-" + format_double(-n.value) + ")";
      } else {
        out += format_double(n.value);
      }
      return;
    case Op::Parameter:
      out += names[static_cast<std::size_t>(n.param)];
      return;
    case Op::Neg:
      out += "(-";
      print(*n.a, names, out);
      out += ')';
      return;
    case Op::Add:
      return binary(" + ");
    case Op::Sub:
      return binary(" - ");
    case Op::Mul:
      return binary(" * ");
    case Op::Div:
      return binary(" / ");
    case Op::Pow:
      out += '(';
      print(*n.a, names, out);
      out += ")^(";
      out += n.value < 0.0 ? "-" + format_double(-n.value) : format_double(n.value);
      out += ')';
      return;
    case Op::Sin:
      return unary("sin");
    case Op::Cos:
      return unary("cos");
    case Op::Tan:
      return unary("tan");
    case Op::Sqrt:
      return unary("sqrt");
    case Op::Exp:
      return unary("exp");
    case Op::Log:
      return unary("log");
  }
}

void collect(const ExprNode& n, std::set<int>& out) {
  if (n.op == Op::Parameter) out.insert(n.param);
  if (n.a) collect(*n.a, out);
  if (n.b) collect(*n.b, out);
}

}  // namespace

bool Interval::bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

Jet2 Jet2::variable(std::size_t d, std::size_t index, double v) {
  Jet2 j(d, v);
  j.grad[index] = 1.0;
  return j;
}

int SymbolTable::param_index(std::string_view name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Expression Expression::parse(std::string_view text, const SymbolTable& symbols) {
  return Expression(Parser(text, symbols).parse());
}

Expression Expression::constant(double v) { return Expression(make_node(Op::Constant, nullptr, nullptr, v)); }

double Expression::eval(std::span<const double> x) const { return eval_of(*root_, x); }

Jet2 Expression::jet(std::span<const double> x) const { return jet_of(*root_, x); }

Interval Expression::range(std::span<const Interval> box) const {
  return Validator{box}.range(*root_, false);
}

void Expression::validate_on(std::span<const Interval> box) const { Validator{box}.range(*root_, true); }

std::string Expression::to_string(std::span<const std::string> names) const {
  std::string out;
  print(*root_, names, out);
  return out;
}

std::vector<int> Expression::parameters() const {
  std::set<int> s;
  collect(*root_, s);
  return {s.begin(), s.end()};
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

}  // namespace biwarp
