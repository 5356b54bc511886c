#pragma once

#include <string>
#include <utility>
#include <vector>

#include "biwarp/warp.hpp"

namespace biwarp {

enum class Status { Pass, Fail, ReportOnly };
enum class Variant { NotApplicable, SasakianForm, EtaFreeForm };

const char* to_string(Status s);
const char* to_string(Variant v);

struct Tolerances {
  double identity = 1e-8;
  double slack = 1e-10;
  double structure = 1e-9;
  double frame = 1e-10;
  double classification = 1e-8;
  double fiber = 1e-8;
  double connection = 1e-6;
  double off_block = 1e-9;
  double hint = 1e-9;
  double slant_algebra = 1e-9;
};

/// A named residual (identity) or slack (inequality) at one sample point.
struct CheckResult {
  std::string id;
  int point = -1;
  double value = 0.0;
  bool is_slack = false;
  double tol = 0.0;
  Status status = Status::ReportOnly;
  Variant variant = Variant::NotApplicable;
  std::string note;

  bool holds() const { return is_slack ? value >= -tol : value <= tol; }
};

CheckResult identity_check(std::string id, double residual, double tol, bool asserted,
                           Variant variant = Variant::NotApplicable, std::string note = {});
CheckResult slack_check(std::string id, double slack, double tol, bool asserted, std::string note = {});
CheckResult skipped_check(std::string id, std::string note, Variant variant = Variant::NotApplicable);

/// Everything the per-point checks need.
struct PointContext {
  const ImmersionSpec& spec;
  const PointGeometry& geo;
  const WarpReport& warp;
  const Classification& cls;
  std::string ambient_label;
  Tolerances tol;
  unsigned long long seed = 42;
  bool structure_ok = true;  // xi in the invariant factor and blocks classified as declared

  bool sasakian() const;
  bool phi_parallel() const;
  double cos_theta() const;
};

std::vector<CheckResult> lemma_ledger(const PointContext& ctx, int random_tuples = 16);
std::vector<CheckResult> mixed_geodesic_report(const PointContext& ctx);
std::vector<CheckResult> equality_diagnostics(const PointContext& ctx);

struct InequalityReport {
  std::string id;
  bool applicable = true;
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  double rhs = 0.0;
  double slack = 0.0;
  double cos_theta = 0.0;
  double theta = 0.0;
  int n1 = 0;
  int n2 = 0;
  std::string note;
};

/// Right-hand-side terms of the general inequality:
/// 2 n1 (|grad ln f1|^2 + 1), 2 n2 (1 + 2 cot^2) |grad ln f2|^2, 2 n2 (1 + cos^4).
/// With n2 == 0 the slant terms are exactly zero.
std::vector<std::pair<std::string, double>> inequality_terms(int n1, int n2, double grad1_sq, double grad2_sq,
                                                             double cos_theta);
double contact_cr_rhs(int n1, double grad1_sq);
double semi_slant_rhs(int n2, double grad2_sq, double cos_theta);
double multiply_cr_rhs(const std::vector<int>& dims, const std::vector<double>& grad_sq);

InequalityReport main_inequality(const PointContext& ctx);
std::vector<InequalityReport> special_inequalities(const PointContext& ctx);

/// Inequality slacks plus the term-reduction consistency checks.
std::vector<CheckResult> inequality_checks(const PointContext& ctx);

}  // namespace biwarp
