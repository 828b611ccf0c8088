#include "eshed/analytic.hpp"

#include "eshed/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace eshed::analytic {

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void nonnegative(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x >= 0) || !std::isfinite(x)) throw ValidationError(fmt::format("{} must be finite and nonnegative", what));
}

} // namespace

double CommunitySeries::gamma() const { return sum(load); }

double CommunitySeries::baseline() const { return sum(gen) / gamma(); }

void CommunitySeries::check() const {
  const std::size_t T = load.size();
  if (T == 0) throw ValidationError("empty community series");
  if (gen.size() != T || cap_plus.size() != T || (export_limit && export_limit->size() != T))
    throw DimensionError("community series lengths differ");
  nonnegative(gen, "generation");
  nonnegative(load, "load");
  nonnegative(cap_plus, "cap_plus");
  if (export_limit)
    for (double u : *export_limit)
      if (std::isnan(u) || u == -INFINITY) throw ValidationError("export limits must not be NaN or -inf");
  if (!(gamma() > 0)) throw ValidationError("zero-demand community");
  if (!(gamma() > sum(gen))) throw ValidationError("community has no energy deficit before flexibility");
}

double max_ratio_unconstrained(const CommunitySeries& c) {
  c.check();
  if (c.export_limit) throw ValidationError("series has export limits; use max_ratio_constrained");
  return c.baseline() + sum(c.cap_plus) / c.gamma();
}

double max_ratio_constrained(const CommunitySeries& c) {
  c.check();
  if (!c.export_limit) throw ValidationError("series has no export limits");
  const std::vector<double>& lim = *c.export_limit;
  const std::size_t T = c.load.size();

  double slack = 0.0;
  for (std::size_t t = 0; t < T; ++t) slack += lim[t] - (c.load[t] - c.gen[t]);
  if (slack < 0) throw ValidationError("sub-unity export regime: total export limit below the energy deficit");

  // Every step either runs S+ at its cap and absorbs the excess with S- (best
  // when the optimum is at most 1), or stops S+ at the export limit (best above 1).
  double num_full = 0, den_full = 0, num_clamp = 0, den_clamp = 0;
  for (std::size_t t = 0; t < T; ++t) {
    num_full += c.gen[t] + c.cap_plus[t];
    den_full += c.load[t] + std::max(c.cap_plus[t] - lim[t], 0.0);
    num_clamp += c.gen[t] + std::clamp(lim[t], 0.0, c.cap_plus[t]);
    den_clamp += c.load[t] + std::max(-lim[t], 0.0);
  }
  return std::max(num_full / den_full, num_clamp / den_clamp);
}

const char* to_string(CurveMode mode) {
  switch (mode) {
  case CurveMode::unconstrained: return "unconstrained";
  case CurveMode::limits: return "limits";
  case CurveMode::zero_export: return "zero_export";
  }
  return "unknown";
}

CurveMode curve_mode_from_string(const std::string& s) {
  for (CurveMode m : {CurveMode::unconstrained, CurveMode::limits, CurveMode::zero_export})
    if (s == to_string(m)) return m;
  throw ValidationError("unknown curve mode '" + s + "'");
}

std::vector<CapacityCurvePoint> capacity_curve(const CommunitySeries& c, const std::vector<double>& budget_grid,
                                               CurveMode mode) {
  c.check();
  if (mode == CurveMode::limits && !c.export_limit) throw ValidationError("limits mode needs export limits");
  for (std::size_t i = 1; i < budget_grid.size(); ++i)
    if (budget_grid[i] < budget_grid[i - 1]) throw ValidationError("budget grid must be nondecreasing");

  CommunitySeries shaped = c;
  if (mode == CurveMode::unconstrained) shaped.export_limit.reset();
  if (mode == CurveMode::zero_export) {
    shaped.export_limit = std::vector<double>(c.load.size());
    for (std::size_t t = 0; t < c.load.size(); ++t) (*shaped.export_limit)[t] = c.load[t] - c.gen[t];
  }
  const double gamma = c.gamma();
  std::vector<CapacityCurvePoint> out;
  for (double budget : budget_grid) {
    if (!(budget >= 0) || !std::isfinite(budget)) throw ValidationError("budgets must be finite and nonnegative");
    for (std::size_t t = 0; t < c.load.size(); ++t) shaped.cap_plus[t] = budget * c.load[t] / gamma;
    const double r =
        mode == CurveMode::unconstrained ? max_ratio_unconstrained(shaped) : max_ratio_constrained(shaped);
    out.push_back({budget, budget / gamma, r});
  }
  return out;
}

double required_budget(double target, double x0, double gamma) {
  if (!(gamma > 0)) throw ValidationError("gamma must be positive");
  if (target < x0) throw ValidationError(fmt::format("target ratio {} is below the baseline {}", target, x0));
  return (target - x0) * gamma;
}

} // namespace eshed::analytic
