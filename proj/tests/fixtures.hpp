#pragma once

// Small hand-built scenarios shared by the test suites.

#include "eshed/analytic.hpp"
#include "eshed/netmodel.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#ifndef ESHED_DATA_DIR
#error "ESHED_DATA_DIR must point at the bundled data directory"
#endif

namespace fixtures {

using eshed::net::Matrix;
using eshed::net::Scenario;

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(ESHED_DATA_DIR) / name; }

inline Matrix row_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t t = 0; t < rows[i].size(); ++t) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[i][t];
  return m;
}

/// Buses 1..n on a path 1-2-...-n, one shed per bus with load, unit weights,
/// zero budgets. Rows of gen/load are per bus.
inline Scenario path_network(const std::vector<std::vector<double>>& gen, const std::vector<std::vector<double>>& load,
                             double flow_limit = std::numeric_limits<double>::infinity(), double reactance = 0.1) {
  Scenario s;
  const int n = static_cast<int>(load.size());
  const int T = static_cast<int>(load.at(0).size());
  for (int i = 0; i < n; ++i) {
    double total = 0;
    for (double v : load[static_cast<std::size_t>(i)]) total += v;
    s.network.buses.push_back({i + 1, total > 0});
  }
  for (int i = 1; i < n; ++i) s.network.branches.push_back({i, i + 1, reactance, flow_limit, flow_limit * 100.0});
  s.network.base_mva = 100.0;
  s.network.reference_bus = 1;
  s.grid = {T, 1.0};
  s.profiles.gen = row_matrix(gen);
  s.profiles.load = row_matrix(load);
  s.budget.cap_plus = Matrix::Zero(n, T);
  s.budget.cap_minus = Matrix::Zero(n, T);
  s.weights.alpha = Eigen::VectorXd::Ones(n);
  s.weights.beta = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    if (s.network.buses[static_cast<std::size_t>(i)].has_load) s.partition.sheds.push_back({"S" + std::to_string(i + 1), {i + 1}});
  return s;
}

inline Scenario single_bus(const std::vector<double>& gen, const std::vector<double>& load) {
  return path_network({gen}, {load});
}

inline Scenario two_bus_line(const std::vector<double>& gen1, const std::vector<double>& load1,
                             const std::vector<double>& gen2, const std::vector<double>& load2,
                             double flow_limit = std::numeric_limits<double>::infinity()) {
  return path_network({gen1, gen2}, {load1, load2}, flow_limit);
}

inline Scenario from_three_bus(const oracle::ThreeBus& c) {
  std::vector<std::vector<double>> gen(3), load(3);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 2; ++t) {
      gen[i].push_back(c.gen[i][t]);
      load[i].push_back(c.load[i][t]);
    }
  Scenario s = path_network(gen, load);
  s.network.branches[0].flow_limit = c.limit12;
  s.network.branches[1].flow_limit = c.limit23;
  for (int i = 0; i < 3; ++i) {
    for (int t = 0; t < 2; ++t) s.budget.cap_plus(i, t) = c.cap[i][t];
    s.weights.alpha[i] = c.alpha[i];
  }
  return s;
}

/// Bus 2 carries the community; bus 1 has no load and +-`slack` flexibility,
/// so it absorbs any export or import over an unlimited line. The only shed is {2}.
inline Scenario community_with_slack(const eshed::analytic::CommunitySeries& c, double cap_minus = 0.0,
                                     double slack = 100.0) {
  const std::vector<double> zero(c.load.size(), 0.0);
  Scenario s = two_bus_line(zero, zero, c.gen, c.load);
  s.flex_only_at_load_buses = false;
  s.budget.cap_plus.row(0).setConstant(slack);
  s.budget.cap_minus.row(0).setConstant(slack);
  for (std::size_t t = 0; t < c.load.size(); ++t) {
    s.budget.cap_plus(1, static_cast<Eigen::Index>(t)) = c.cap_plus[t];
    s.budget.cap_minus(1, static_cast<Eigen::Index>(t)) = cap_minus;
  }
  s.weights.alpha[0] = s.weights.beta[0] = 0.0;
  if (c.export_limit) {
    const Eigen::Index T = static_cast<Eigen::Index>(c.load.size());
    eshed::net::ExportLimits lim{Matrix::Constant(2, T, std::numeric_limits<double>::infinity()),
                                 Matrix::Constant(2, T, -std::numeric_limits<double>::infinity())};
    for (Eigen::Index t = 0; t < T; ++t) lim.upper(1, t) = (*c.export_limit)[static_cast<std::size_t>(t)];
    s.budget.export_limits = lim;
  }
  return s;
}

/// Flexible slack at bus 1, three loaded buses with their own sheds. P2 lands
/// strictly inside (0, 1) with room for +-2 epsilon on either side.
inline Scenario sweep_case() {
  Scenario s = path_network({{0, 0}, {0.3, 0.1}, {0.2, 0.4}, {0.1, 0.0}}, {{0, 0}, {1.0, 0.8}, {0.6, 0.9}, {0.5, 0.7}},
                            2.0);
  s.flex_only_at_load_buses = false;
  s.budget.cap_plus.setConstant(0.3);
  s.budget.cap_minus.setConstant(0.3);
  s.budget.cap_plus.row(0).setConstant(5.0);
  s.budget.cap_minus.row(0).setConstant(5.0);
  s.weights.alpha << 0.0, 1.0, 2.5, 4.0;
  s.weights.beta << 0.0, 0.5, 0.5, 0.5;
  return s;
}

} // namespace fixtures
