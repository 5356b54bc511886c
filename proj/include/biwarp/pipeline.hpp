#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biwarp/checks.hpp"
#include "biwarp/energy.hpp"

namespace biwarp {

inline constexpr const char* kReportSchema = "biwarp-report/1";
inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string example;        // built-in id, or empty
  std::string manifest_path;  // manifest file, or empty
  std::map<std::string, double> constants;  // built-in constant overrides
  int grid = 0;               // points per axis at cell centres
  int random = 0;             // random point count (used when grid == 0)
  unsigned long long seed = 42;
  Tolerances tol;
  std::optional<AmbientKind> ambient;

  // energy
  std::map<std::string, Interval> box;       // per base coordinate, defaults to the domain
  std::map<std::string, double> fiber;       // fixed coordinates, defaults to the domain midpoint
  int order = 8;
  bool oracle = true;
};

struct PointRecord {
  int index = 0;
  std::vector<double> u;
  std::vector<CheckResult> checks;
};

struct Summary {
  int pass = 0;
  int fail = 0;
  int report_only = 0;
};

struct RunReport {
  std::string command;
  std::string source;
  std::string manifest;  // canonical manifest text
  std::string ambient_label;
  AmbientSpec ambient;
  std::string sampling;
  Tolerances tol;
  unsigned long long seed = 42;
  std::vector<PointRecord> points;
  std::optional<EnergyReport> energy;
  Summary summary;
  std::vector<std::string> notes;

  int exit_code() const { return summary.fail > 0 ? 1 : 0; }
};

/// Manifest file or built-in example, with the ambient override applied.
/// Throws ParseError or std::runtime_error (unreadable file).
ImmersionSpec load_spec(const RunConfig& cfg);

/// Cell-centre grid (cfg.grid per axis) or seeded uniform samples.
std::vector<std::vector<double>> sample_points(const ImmersionSpec& spec, const RunConfig& cfg);

/// All per-point checks, sorted by id. Numerical breakdowns become failed
/// checks instead of exceptions.
std::vector<CheckResult> evaluate_point(const ImmersionSpec& spec, const AmbientStructure& amb,
                                        const std::string& ambient_label, std::span<const double> u, int index,
                                        const Tolerances& tol, unsigned long long seed,
                                        std::vector<std::string>* notes = nullptr);

RunReport run_verify(const ImmersionSpec& spec, const RunConfig& cfg);
RunReport run_energy(const ImmersionSpec& spec, const RunConfig& cfg);

nlohmann::ordered_json to_json(const RunReport& rep);
std::string to_text(const RunReport& rep);

}  // namespace biwarp
