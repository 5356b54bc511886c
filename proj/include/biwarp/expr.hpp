#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biwarp {

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool bounded() const noexcept;
  double mid() const noexcept { return 0.5 * (lo + hi); }
  double width() const noexcept { return hi - lo; }
};

/// Second-order jet of a scalar function of d variables: value, gradient and
/// the (symmetric, row-major) Hessian.
struct Jet2 {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;

  Jet2() = default;
  explicit Jet2(std::size_t d, double v = 0.0) : value(v), grad(d, 0.0), hess(d * d, 0.0) {}

  std::size_t dim() const noexcept { return grad.size(); }
  double h(std::size_t i, std::size_t j) const { return hess[i * grad.size() + j]; }
  double& h(std::size_t i, std::size_t j) { return hess[i * grad.size() + j]; }

  static Jet2 variable(std::size_t d, std::size_t index, double v);
};

enum class Op { Constant, Parameter, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Sqrt, Exp, Log };

struct ExprNode {
  Op op = Op::Constant;
  double value = 0.0;  // literal for Constant, exponent for Pow
  int param = -1;
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

/// Names visible to an expression: ordered parameters (become jet variables)
/// and named constants (folded to literals at parse time). `pi` is always
/// available.
struct SymbolTable {
  std::vector<std::string> params;
  std::map<std::string, double> constants;

  int param_index(std::string_view name) const;
};

/// Immutable expression tree over parameter symbols.
class Expression {
 public:
  Expression() = default;

  /// Parses `text`. Syntax errors and unknown symbols throw ParseError whose
  /// column is the 1-based offset into `text` (line is always 1).
  static Expression parse(std::string_view text, const SymbolTable& symbols);
  static Expression constant(double v);

  bool empty() const noexcept { return root_ == nullptr; }
  const ExprNode& root() const { return *root_; }

  double eval(std::span<const double> x) const;
  Jet2 jet(std::span<const double> x) const;

  /// Conservative range over a box of parameter intervals.
  Interval range(std::span<const Interval> box) const;

  /// Rejects expressions that can leave their real domain on `box`: fractional
  /// powers, sqrt and log of possibly non-positive arguments, division by a
  /// possibly vanishing denominator, tan across a pole.
  void validate_on(std::span<const Interval> box) const;

  /// Fully parenthesised text that parses back to an identical tree.
  std::string to_string(std::span<const std::string> names) const;

  /// Sorted, unique parameter indices referenced by the tree.
  std::vector<int> parameters() const;

 private:
  explicit Expression(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}
  std::shared_ptr<const ExprNode> root_;
};

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace biwarp
