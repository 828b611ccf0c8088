#include "eshed/error.hpp"
#include "eshed/problems.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace eshed::problems {

std::vector<std::string> VariableLayout::names(const net::Network& network) const {
  std::vector<std::string> out(static_cast<std::size_t>(size()));
  auto put = [&](int j, std::string s) { out[static_cast<std::size_t>(j)] = std::move(s); };
  for (int i = 0; i < n_; ++i) {
    const int id = network.buses[static_cast<std::size_t>(i)].id;
    for (int t = 0; t < T_; ++t) {
      put(theta(i, t), fmt::format("theta[{},{}]", id, t + 1));
      put(s_plus(i, t), fmt::format("S+[{},{}]", id, t + 1));
      put(s_minus(i, t), fmt::format("S-[{},{}]", id, t + 1));
    }
    put(cap_plus(i), fmt::format("C+[{}]", id));
    put(cap_minus(i), fmt::format("C-[{}]", id));
  }
  for (int e = 0; e < e_; ++e) {
    const auto& br = network.branches[static_cast<std::size_t>(e)];
    for (int t = 0; t < T_; ++t) put(flow(e, t), fmt::format("P[{}-{},{}]", br.from, br.to, t + 1));
  }
  return out;
}

namespace {

void require_valid(const Scenario& s) {
  const net::ValidationReport report = net::validate_scenario(s);
  if (report.ok()) return;
  const net::Violation& v = report.violations.front();
  throw ValidationError(fmt::format("invalid scenario: {}: {} at {} ({} violation(s))", net::to_string(v.kind), v.message, v.where,
                                    report.violations.size()));
}

} // namespace

P1Program build_p1(const Scenario& s, const std::vector<double>& x_min) {
  require_valid(s);
  if (static_cast<int>(x_min.size()) != s.num_sheds())
    throw ValidationError(fmt::format("x_min has {} entries for {} energysheds", x_min.size(), s.num_sheds()));
  for (double x : x_min)
    if (!(x >= 0) || !std::isfinite(x)) throw ValidationError(fmt::format("ratio floor {} must be nonnegative", x));

  const net::Network& net = s.network;
  const int N = net.num_buses(), E = net.num_branches(), T = s.grid.steps;
  P1Program out;
  out.layout = VariableLayout(N, E, T);
  out.x_min = x_min;
  const VariableLayout& L = out.layout;
  qp::QuadProgram p = qp::QuadProgram::with_variables(L.size());
  p.names = L.names(net);

  // bounds
  for (int e = 0; e < E; ++e) {
    const double lim = net.branches[static_cast<std::size_t>(e)].flow_limit;
    for (int t = 0; t < T; ++t) {
      p.lower[L.flow(e, t)] = -lim;
      p.upper[L.flow(e, t)] = lim;
    }
  }
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      p.lower[L.s_plus(i, t)] = 0.0;
      p.upper[L.s_plus(i, t)] = s.budget.cap_plus(i, t);
      p.lower[L.s_minus(i, t)] = 0.0;
      p.upper[L.s_minus(i, t)] = s.budget.cap_minus(i, t);
    }
    p.lower[L.cap_plus(i)] = 0.0;
    p.upper[L.cap_plus(i)] = s.budget.cap_plus.row(i).maxCoeff();
    p.lower[L.cap_minus(i)] = 0.0;
    p.upper[L.cap_minus(i)] = s.budget.cap_minus.row(i).maxCoeff();
    p.q_diag[L.cap_plus(i)] = s.weights.alpha[i];
    p.q_diag[L.cap_minus(i)] = s.weights.beta[i];
  }

  qp::RowBuilder eq(L.size());
  // nodal balance: G - L + S+ - S- = outgoing flow
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      const int r = eq.add_row(s.profiles.load(i, t) - s.profiles.gen(i, t));
      eq.add(r, L.s_plus(i, t), 1.0);
      eq.add(r, L.s_minus(i, t), -1.0);
    }
  for (int e = 0; e < E; ++e) {
    const auto& br = net.branches[static_cast<std::size_t>(e)];
    const int f = net.index_of(br.from), g = net.index_of(br.to);
    for (int t = 0; t < T; ++t) {
      eq.add(f * T + t, L.flow(e, t), -1.0);
      eq.add(g * T + t, L.flow(e, t), 1.0);
    }
  }
  // flow law x P = theta_from - theta_to
  for (int e = 0; e < E; ++e) {
    const auto& br = net.branches[static_cast<std::size_t>(e)];
    const int f = net.index_of(br.from), g = net.index_of(br.to);
    for (int t = 0; t < T; ++t) {
      const int r = eq.add_row(0.0);
      eq.add(r, L.flow(e, t), br.reactance);
      eq.add(r, L.theta(f, t), -1.0);
      eq.add(r, L.theta(g, t), 1.0);
    }
  }
  const int ref = net.index_of(net.reference_bus);
  for (int t = 0; t < T; ++t) eq.add(eq.add_row(0.0), L.theta(ref, t), 1.0);
  p.A_eq = eq.matrix();
  p.b_eq = eq.rhs();

  qp::RowBuilder in(L.size());
  // ratio floors, divided through by the shed's demand
  for (int k = 0; k < s.num_sheds(); ++k) {
    const auto idx = s.shed_indices(k);
    double gen = 0, load = 0;
    for (int i : idx) {
      gen += s.profiles.gen.row(i).sum();
      load += s.profiles.load.row(i).sum();
    }
    const double x = x_min[static_cast<std::size_t>(k)];
    const int r = in.add_row((gen - x * load) / load);
    for (int i : idx)
      for (int t = 0; t < T; ++t) {
        in.add(r, L.s_plus(i, t), -1.0 / load);
        in.add(r, L.s_minus(i, t), x / load);
      }
    out.ratio_rows.push_back(r);
    out.ratio_scale.push_back(load);
  }
  // capacity epigraph
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      if (s.budget.cap_plus(i, t) > 0) {
        const int r = in.add_row(0.0);
        in.add(r, L.s_plus(i, t), 1.0);
        in.add(r, L.cap_plus(i), -1.0);
      }
      if (s.budget.cap_minus(i, t) > 0) {
        const int r = in.add_row(0.0);
        in.add(r, L.s_minus(i, t), 1.0);
        in.add(r, L.cap_minus(i), -1.0);
      }
    }
  // optional export bounds on S+ - S-
  if (const auto& lim = s.budget.export_limits) {
    for (int i = 0; i < N; ++i)
      for (int t = 0; t < T; ++t) {
        if (std::isfinite(lim->upper(i, t))) {
          const int r = in.add_row(lim->upper(i, t));
          in.add(r, L.s_plus(i, t), 1.0);
          in.add(r, L.s_minus(i, t), -1.0);
        }
        if (std::isfinite(lim->lower(i, t))) {
          const int r = in.add_row(-lim->lower(i, t));
          in.add(r, L.s_plus(i, t), -1.0);
          in.add(r, L.s_minus(i, t), 1.0);
        }
      }
  }
  p.G_ineq = in.matrix();
  p.h_ineq = in.rhs();
  p.check();
  out.program = std::move(p);
  return out;
}

P1Program build_p3(const Scenario& s, double tau) {
  if (!(tau >= 0) || !std::isfinite(tau)) throw ValidationError(fmt::format("tau {} must be nonnegative", tau));
  P1Program out = build_p1(s, std::vector<double>(static_cast<std::size_t>(s.num_sheds()), tau));
  out.program.q_diag.setZero();
  out.program.c_lin.setZero();
  return out;
}

P1Result solve_p1(const Scenario& s, const std::vector<double>& x_min, const qp::SolverConfig& cfg) {
  P1Result r{build_p1(s, x_min), {}, std::nullopt};
  r.solution = qp::solve_qp(r.p1.program, cfg);
  if (r.solution.status == qp::SolveStatus::optimal) r.report = extract_report(s, r.p1, r.solution);
  return r;
}

bool is_neg_infinite(double v) { return std::isinf(v) && v < 0; }

FTau f_tau_from_cost(double tau, double cost, double zeta) {
  if (!(zeta > 0)) throw ValidationError("zeta must be positive");
  FTau f;
  f.tau = tau;
  f.cost = cost;
  f.feasible = std::isfinite(cost);
  f.f = f.feasible ? tau - cost / zeta : -std::numeric_limits<double>::infinity();
  return f;
}

FTau evaluate_f_tau(const Scenario& s, double tau, double zeta, const qp::SolverConfig& cfg) {
  if (!(zeta > 0)) throw ValidationError("zeta must be positive");
  const P1Result r = solve_p1(s, std::vector<double>(static_cast<std::size_t>(s.num_sheds()), tau), cfg);
  switch (r.solution.status) {
  case qp::SolveStatus::optimal: return f_tau_from_cost(tau, r.report->cost, zeta);
  case qp::SolveStatus::infeasible: return f_tau_from_cost(tau, std::numeric_limits<double>::infinity(), zeta);
  case qp::SolveStatus::max_iter: break;
  }
  throw SolverError(fmt::format("P1 solve at tau = {} stopped after {} iterations without a verdict", tau,
                                r.solution.iterations));
}

} // namespace eshed::problems
