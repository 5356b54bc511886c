#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biwarp/expr.hpp"

namespace biwarp {

/// Which factor of N_T x_{f1} N_perp x_{f2} N_theta a parameter belongs to.
enum class Block { T, Perp, Theta, Reeb };

enum class AmbientKind { EuclideanContact, SasakianStandard };

const char* to_string(Block b);
const char* to_string(AmbientKind k);
AmbientKind ambient_kind_from_string(std::string_view s);

struct AmbientSpec {
  AmbientKind kind = AmbientKind::EuclideanContact;
  int m = 0;
};

/// Closed-form expectation shipped with a manifest (warping function or slant
/// cosine). `asserted == false` turns its comparison into a report-only check.
struct Hint {
  std::string text;
  Expression expr;
  bool asserted = true;
};

/// Parsed, validated parametric immersion psi: U -> R^{2m+1}.
struct ImmersionSpec {
  int ambient_dim = 0;
  AmbientSpec ambient;
  std::vector<std::string> params;
  std::vector<Block> blocks;
  int reeb = -1;               // index of the reeb parameter, -1 if none
  Block reeb_factor = Block::T;  // warped factor that contains xi
  std::map<std::string, double> constants;
  std::vector<std::string> component_text;
  std::vector<Expression> components;
  std::vector<Interval> domain;
  std::optional<Hint> f1_hint;
  std::optional<Hint> f2_hint;
  std::optional<Hint> slant_hint;  // cos(theta) on the theta block
  std::vector<std::string> notes;

  std::size_t dim() const noexcept { return params.size(); }
  /// Parameter indices assigned to `b` (Reeb gives at most one).
  std::vector<int> indices(Block b) const;
  /// Base coordinates of the warped product: T params plus the reeb param when
  /// xi lies in the T factor.
  std::vector<int> base_indices() const;
  /// Fiber coordinates of factor 1 (perp) or 2 (theta), including the reeb
  /// param when reeb_factor places it there.
  std::vector<int> fiber_indices(int factor) const;
  bool in_domain(std::span<const double> u, double slack = 0.0) const;
  std::vector<double> domain_midpoint() const;
};

/// Parses the manifest grammar:
///
///   # comment
///   ambient    = {kind: "euclidean_contact" | "sasakian_standard", m: 5}
///   constants  = {k: 1, theta0: "pi/4"}
///   params     = [u, v, w, z]
///   blocks     = {T: [u, v], perp: [w], theta: [], reeb: z}
///   reeb_factor = T
///   domain     = {u: [1, 2], v: [1, 2], w: [0.1, 1], z: [0, 1]}
///   psi        = ["u*cos(w)", ...]
///   warp_hints = {f1: "sqrt(u^2+v^2)", f2: "..."}
///   slant_hint = {cos: "...", mode: assert | report}
///   notes      = ["free text", ...]
///
/// Throws ParseError with line/column on any syntax or validation failure.
ImmersionSpec parse_immersion(std::string_view text);

/// Canonical manifest text; parse_immersion(to_manifest(s)) reproduces s.
std::string to_manifest(const ImmersionSpec& spec);

/// AD jets of every component at `point`. Throws DomainError outside the domain.
std::vector<Jet2> eval_jet2(const ImmersionSpec& spec, std::span<const double> point);

/// Same as eval_jet2 without the domain check; used by stencils that may step
/// a hair past the boundary.
std::vector<Jet2> eval_jet2_unchecked(const ImmersionSpec& spec, std::span<const double> point);

/// Central-difference estimate of the jets (step^2 accurate). With
/// `richardson`, combines step and step/2 to cancel the leading error term.
/// Throws DomainError if any stencil point leaves the domain.
std::vector<Jet2> finite_diff_jet2(const ImmersionSpec& spec, std::span<const double> point,
                                   double step = 1e-4, bool richardson = false);

}  // namespace biwarp
