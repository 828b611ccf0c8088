#pragma once

// Compiles a Scenario into the canonical QuadProgram and decodes solutions.
//
// Variables, in this order: angles theta[i,t], branch flows P[e,t],
// flexibility S+[i,t] and S-[i,t], then capacities C+[i] and C-[i].

#include "eshed/netmodel.hpp"
#include "eshed/qpcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eshed::problems {

using net::Matrix;
using net::Scenario;

class VariableLayout {
public:
  VariableLayout() = default;
  VariableLayout(int buses, int branches, int steps) : n_(buses), e_(branches), T_(steps) {}

  int theta(int i, int t) const { return i * T_ + t; }
  int flow(int e, int t) const { return n_ * T_ + e * T_ + t; }
  int s_plus(int i, int t) const { return (n_ + e_) * T_ + i * T_ + t; }
  int s_minus(int i, int t) const { return (2 * n_ + e_) * T_ + i * T_ + t; }
  int cap_plus(int i) const { return (3 * n_ + e_) * T_ + i; }
  int cap_minus(int i) const { return (3 * n_ + e_) * T_ + n_ + i; }
  int size() const { return (3 * n_ + e_) * T_ + 2 * n_; }

  int buses() const { return n_; }
  int branches() const { return e_; }
  int steps() const { return T_; }

  std::vector<std::string> names(const net::Network& network) const;

private:
  int n_ = 0, e_ = 0, T_ = 0;
};

struct P1Program {
  qp::QuadProgram program;
  VariableLayout layout;
  std::vector<double> x_min;   ///< per shed
  std::vector<int> ratio_rows; ///< row of each shed's ratio constraint in G_ineq
  std::vector<double> ratio_scale; ///< row k was divided by this (shed demand)
};

/// Minimum-cost operation with per-shed ratio floors. Throws ValidationError
/// for an invalid scenario, a wrong-length or negative x_min.
P1Program build_p1(const Scenario& s, const std::vector<double>& x_min);

/// Feasibility form: build_p1 with every floor at tau and a zero objective.
P1Program build_p3(const Scenario& s, double tau);

struct ShedReport {
  std::string name;
  double ratio = 0.0;    ///< recomputed from the decoded dispatch
  double baseline = 0.0; ///< ratio with no flexibility
  double floor = 0.0;    ///< required minimum
};

struct BusReport {
  int id = 0;
  bool has_load = false;
  double alpha = 0.0;
  double beta = 0.0;
  double ratio = 0.0;     ///< bus-level ratio, NaN without load
  double cap_plus = 0.0;  ///< max_t S+ (p.u.)
  double cap_minus = 0.0; ///< max_t S- (p.u.)
};

struct BranchReport {
  int from = 0;
  int to = 0;
  double peak_flow = 0.0; ///< max_t |P| (p.u.)
  double loading = 0.0;   ///< peak / limit, 0 for unlimited branches
};

struct OperationReport {
  std::string status;
  double cost = 0.0; ///< sum alpha (max S+)^2 + beta (max S-)^2
  double objective = 0.0; ///< solver objective, same formula on C+/C-
  std::vector<ShedReport> sheds;
  std::vector<BusReport> buses;
  std::vector<BranchReport> branches;
  double balance_residual = 0.0;  ///< max_t |sum_i (G - L + S+ - S-)|
  double flow_law_residual = 0.0; ///< max |x P - (theta_from - theta_to)|
  double base_mva = 100.0;
  double step_hours = 1.0;
  Matrix s_plus;
  Matrix s_minus;
  Matrix flows; ///< branch x time

  double min_ratio() const;
};

/// Decodes an optimal solution. Throws SolverError for a non-optimal one and
/// when a recomputed ratio disagrees with its constraint row by more than 1e-6.
OperationReport extract_report(const Scenario& s, const P1Program& p1, const qp::Solution& sol);

struct P1Result {
  P1Program p1;
  qp::Solution solution;
  std::optional<OperationReport> report; ///< set when the solve is optimal
};

P1Result solve_p1(const Scenario& s, const std::vector<double>& x_min, const qp::SolverConfig& cfg = {});

struct FTau {
  double tau = 0.0;
  double f = 0.0;    ///< tau - cost / zeta, -inf when infeasible
  double cost = 0.0; ///< +inf when infeasible
  bool feasible = false;
};

bool is_neg_infinite(double v);

/// Solves P1 with every floor at tau and scores tau - f0 / zeta.
/// Throws SolverError if the solver neither converges nor proves infeasibility.
FTau evaluate_f_tau(const Scenario& s, double tau, double zeta, const qp::SolverConfig& cfg = {});
/// Same, reusing an already computed cost (f0 does not depend on zeta).
FTau f_tau_from_cost(double tau, double cost, double zeta);

nlohmann::json to_json(const OperationReport& r);
/// Load buses ordered by alpha ascending (ties by id):
/// bus,alpha,ratio,cap_plus_pu,cap_minus_pu,cap_plus_mw,cap_minus_mw
std::string bus_table_csv(const OperationReport& r);

} // namespace eshed::problems
