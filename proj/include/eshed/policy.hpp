#pragma once

// Policy design on top of P1: the max-min ratio by bisection, the cost-aware
// tau sweep, Pareto fronts over zeta, and the zero-requirement baseline.

#include "eshed/problems.hpp"

#include <limits>
#include <string>
#include <vector>

namespace eshed::policy {

using problems::OperationReport;
using problems::Scenario;

struct PolicyConfig {
  double epsilon = 1e-6;
  double tau_lo = 0.0;
  double tau_hi = 1.0;
  double mesh = 0.01;
  int refine_rounds = 1;
  std::vector<double> zeta_grid;
  bool expand_bracket = false; ///< double tau_hi until a probe is infeasible
  int threads = 1;             ///< sweep workers, 0 = hardware concurrency
  qp::SolverConfig solver;

  /// Throws ValidationError on epsilon <= 0, tau_lo >= tau_hi, mesh <= 0, ...
  void check() const;
};

enum class Kind { p2, p4 };

const char* to_string(Kind kind);

struct TracePoint {
  double tau = 0.0;
  bool feasible = false;
  double f = std::numeric_limits<double>::quiet_NaN(); ///< P4 only, -inf when infeasible
  double cost = std::numeric_limits<double>::quiet_NaN(); ///< P4 only, +inf when infeasible
};

struct PolicyResult {
  Kind kind = Kind::p2;
  double tau_star = 0.0;
  double f_star = std::numeric_limits<double>::quiet_NaN(); ///< P4 only
  double cost = 0.0;
  double baseline_cost = 0.0;
  double cost_normalized = 1.0;
  OperationReport report;
  std::vector<TracePoint> trace; ///< probes in evaluation order (P2) or sorted by tau (P4)
  int probes = 0;                ///< feasibility checks (P2) or P1 solves (P4)
  double bracket_lo = 0.0;       ///< P2 final bracket
  double bracket_hi = 0.0;
};

struct Baseline {
  double cost = 0.0;
  OperationReport report;
};

/// P1 with every floor at zero. Throws InfeasibleError when even that fails.
Baseline baseline(const Scenario& s, const qp::SolverConfig& solver = {});

/// cost / cost0, with 0/0 read as 1.
double normalized_cost(double cost, double cost0);

/// Bisection on the feasibility of P3. The lower end is only probed when no
/// midpoint turns out feasible. Throws InfeasibleError if tau_lo is infeasible.
PolicyResult solve_p2(const Scenario& s, const PolicyConfig& cfg);

/// Sweep of tau - f0(tau) / zeta on the mesh, argmax with ties toward smaller
/// tau, then refine_rounds local sweeps at a tenth of the previous step.
PolicyResult solve_p4(const Scenario& s, double zeta, const PolicyConfig& cfg);

struct ParetoPoint {
  double zeta = 0.0;
  double tau_star = 0.0;
  double f_star = 0.0;
  double cost = 0.0;
  double cost_normalized = 0.0;
};

struct ParetoFront {
  std::vector<ParetoPoint> points; ///< ascending zeta
  std::vector<PolicyResult> results;
  bool tau_monotone = true; ///< tau_star nondecreasing along the zeta grid
};

/// solve_p4 for every zeta in cfg.zeta_grid. P1 costs are shared across zeta.
ParetoFront pareto_front(const Scenario& s, const PolicyConfig& cfg);

/// No feasible probe lies above an infeasible one.
bool feasibility_monotone(const std::vector<TracePoint>& trace);

/// tau,feasible
std::string p2_trace_csv(const PolicyResult& r);
/// tau,f_tau,cost
std::string p4_trace_csv(const PolicyResult& r);
/// zeta,tau_star,cost_normalized
std::string pareto_csv(const ParetoFront& front);

nlohmann::json to_json(const PolicyResult& r);

} // namespace eshed::policy
