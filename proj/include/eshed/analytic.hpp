#pragma once

// Closed-form capacity analysis for a single community treated as one node.
// Series are per-step powers; sums over steps stand in for energy.

#include <optional>
#include <string>
#include <vector>

namespace eshed::analytic {

struct CommunitySeries {
  std::vector<double> gen;
  std::vector<double> load;
  std::vector<double> cap_plus;
  std::optional<std::vector<double>> export_limit; ///< upper bound on S+ - S-, per step

  double gamma() const; ///< total demand
  double baseline() const;
  /// Throws ValidationError unless lengths match, entries are nonnegative
  /// (export limits may be negative), and total load exceeds total generation.
  void check() const;
};

/// X0 + sum(cap_plus) / gamma.
double max_ratio_unconstrained(const CommunitySeries& c);

/// Maximum ratio with per-step export limits (S- unbounded above). Throws
/// ValidationError("sub-unity export regime") when sum(limit) < sum(load - gen).
double max_ratio_constrained(const CommunitySeries& c);

enum class CurveMode { unconstrained, limits, zero_export };

const char* to_string(CurveMode mode);
CurveMode curve_mode_from_string(const std::string& s);

struct CapacityCurvePoint {
  double budget = 0.0;            ///< sum of cap_plus over the horizon
  double budget_normalized = 0.0; ///< budget / gamma
  double max_ratio = 0.0;
};

/// For each budget B, cap_plus_t = B * load_t / gamma (load-proportional), then
/// the proposition matching `mode`. zero_export replaces the limits with load - gen.
std::vector<CapacityCurvePoint> capacity_curve(const CommunitySeries& c, const std::vector<double>& budget_grid,
                                               CurveMode mode);

/// (target - x0) * gamma; throws when target < x0 or gamma <= 0.
double required_budget(double target, double x0, double gamma);

} // namespace eshed::analytic
