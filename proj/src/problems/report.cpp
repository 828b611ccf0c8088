#include "eshed/error.hpp"
#include "eshed/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace eshed::problems {

double OperationReport::min_ratio() const {
  double m = std::numeric_limits<double>::infinity();
  for (const ShedReport& s : sheds) m = std::min(m, s.ratio);
  return m;
}

OperationReport extract_report(const Scenario& s, const P1Program& p1, const qp::Solution& sol) {
  if (sol.status != qp::SolveStatus::optimal)
    throw SolverError(fmt::format("cannot report on a {} solution", qp::to_string(sol.status)));
  const VariableLayout& L = p1.layout;
  if (sol.x.size() != L.size()) throw DimensionError("solution does not match the program layout");
  const net::Network& net = s.network;
  const int N = L.buses(), E = L.branches(), T = L.steps();

  OperationReport r;
  r.status = qp::to_string(sol.status);
  r.objective = sol.objective;
  r.base_mva = net.base_mva;
  r.step_hours = s.grid.step_hours;
  r.s_plus = Matrix(N, T);
  r.s_minus = Matrix(N, T);
  r.flows = Matrix(E, T);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      // clip interior-point dust at the bounds
      r.s_plus(i, t) = std::max(sol.x[L.s_plus(i, t)], 0.0);
      r.s_minus(i, t) = std::max(sol.x[L.s_minus(i, t)], 0.0);
    }
  for (int e = 0; e < E; ++e)
    for (int t = 0; t < T; ++t) r.flows(e, t) = sol.x[L.flow(e, t)];

  for (int i = 0; i < N; ++i) {
    BusReport b;
    b.id = net.buses[static_cast<std::size_t>(i)].id;
    b.has_load = net.buses[static_cast<std::size_t>(i)].has_load;
    b.alpha = s.weights.alpha[i];
    b.beta = s.weights.beta[i];
    b.cap_plus = r.s_plus.row(i).maxCoeff();
    b.cap_minus = r.s_minus.row(i).maxCoeff();
    const double den = s.profiles.load.row(i).sum() + r.s_minus.row(i).sum();
    b.ratio = s.profiles.load.row(i).sum() > 0 ? (s.profiles.gen.row(i).sum() + r.s_plus.row(i).sum()) / den
                                               : std::numeric_limits<double>::quiet_NaN();
    r.cost += b.alpha * b.cap_plus * b.cap_plus + b.beta * b.cap_minus * b.cap_minus;
    r.buses.push_back(b);
  }

  const qp::Vector slack = p1.program.h_ineq - p1.program.G_ineq * sol.x;
  for (int k = 0; k < s.num_sheds(); ++k) {
    ShedReport sr;
    sr.name = s.partition.sheds[static_cast<std::size_t>(k)].name;
    sr.ratio = net::shed_ratio(s, k, r.s_plus, r.s_minus);
    sr.baseline = net::baseline_ratio(s, k);
    sr.floor = p1.x_min[static_cast<std::size_t>(k)];
    double extra_load = 0;
    for (int i : s.shed_indices(k)) extra_load += r.s_minus.row(i).sum();
    const double scale = p1.ratio_scale[static_cast<std::size_t>(k)];
    const double expected = (sr.ratio - sr.floor) * (scale + extra_load) / scale;
    const double row_slack = slack[p1.ratio_rows[static_cast<std::size_t>(k)]];
    if (std::abs(expected - row_slack) > 1e-6)
      throw SolverError(fmt::format("energyshed {}: recomputed ratio {} disagrees with its constraint (slack {} vs {})",
                                    sr.name, sr.ratio, row_slack, expected));
    r.sheds.push_back(sr);
  }

  for (int e = 0; e < E; ++e) {
    const auto& br = net.branches[static_cast<std::size_t>(e)];
    BranchReport b{br.from, br.to, r.flows.row(e).cwiseAbs().maxCoeff(), 0.0};
    if (std::isfinite(br.flow_limit) && br.flow_limit > 0) b.loading = b.peak_flow / br.flow_limit;
    const int f = net.index_of(br.from), g = net.index_of(br.to);
    for (int t = 0; t < T; ++t)
      r.flow_law_residual = std::max(r.flow_law_residual, std::abs(br.reactance * r.flows(e, t) -
                                                                   (sol.x[L.theta(f, t)] - sol.x[L.theta(g, t)])));
    r.branches.push_back(b);
  }
  for (int t = 0; t < T; ++t) {
    double net_injection = 0;
    for (int i = 0; i < N; ++i)
      net_injection += s.profiles.gen(i, t) - s.profiles.load(i, t) + sol.x[L.s_plus(i, t)] - sol.x[L.s_minus(i, t)];
    r.balance_residual = std::max(r.balance_residual, std::abs(net_injection));
  }
  return r;
}

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

nlohmann::json to_json(const OperationReport& r) {
  nlohmann::json sheds = nlohmann::json::array(), buses = nlohmann::json::array(), branches = nlohmann::json::array();
  for (const ShedReport& s : r.sheds)
    sheds.push_back({{"name", s.name}, {"ratio", s.ratio}, {"baseline", s.baseline}, {"floor", s.floor}});
  for (const BusReport& b : r.buses)
    buses.push_back({{"bus", b.id},
                     {"has_load", b.has_load},
                     {"alpha", b.alpha},
                     {"beta", b.beta},
                     {"ratio", number(b.ratio)},
                     {"cap_plus_pu", b.cap_plus},
                     {"cap_minus_pu", b.cap_minus},
                     {"cap_plus_mw", b.cap_plus * r.base_mva},
                     {"cap_minus_mw", b.cap_minus * r.base_mva}});
  for (const BranchReport& b : r.branches)
    branches.push_back({{"from", b.from},
                        {"to", b.to},
                        {"peak_flow_pu", b.peak_flow},
                        {"peak_flow_mw", b.peak_flow * r.base_mva},
                        {"loading", b.loading}});
  return {{"status", r.status},
          {"cost", r.cost},
          {"objective", r.objective},
          {"base_mva", r.base_mva},
          {"step_hours", r.step_hours},
          {"balance_residual", r.balance_residual},
          {"flow_law_residual", r.flow_law_residual},
          {"sheds", sheds},
          {"buses", buses},
          {"branches", branches}};
}

std::string bus_table_csv(const OperationReport& r) {
  std::vector<const BusReport*> rows;
  for (const BusReport& b : r.buses)
    if (b.has_load) rows.push_back(&b);
  std::stable_sort(rows.begin(), rows.end(), [](const BusReport* a, const BusReport* b) {
    return a->alpha != b->alpha ? a->alpha < b->alpha : a->id < b->id;
  });
  std::string out = "bus,alpha,ratio,cap_plus_pu,cap_minus_pu,cap_plus_mw,cap_minus_mw\n";
  for (const BusReport* b : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", b->id, b->alpha, b->ratio, b->cap_plus, b->cap_minus,
                       b->cap_plus * r.base_mva, b->cap_minus * r.base_mva);
  return out;
}

} // namespace eshed::problems
