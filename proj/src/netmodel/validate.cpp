#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

namespace eshed::net {

const char* to_string(ViolationKind kind) {
  switch (kind) {
  case ViolationKind::invalid_base_mva: return "invalid base MVA";
  case ViolationKind::duplicate_bus: return "duplicate bus id";
  case ViolationKind::missing_reference_bus: return "missing reference bus";
  case ViolationKind::invalid_branch: return "invalid branch";
  case ViolationKind::network_disconnected: return "network not connected";
  case ViolationKind::invalid_time_grid: return "invalid time grid";
  case ViolationKind::dimension_mismatch: return "dimension mismatch";
  case ViolationKind::negative_profile: return "negative profile value";
  case ViolationKind::load_flag_mismatch: return "load at a bus without load";
  case ViolationKind::negative_budget: return "negative flexibility cap";
  case ViolationKind::flex_at_non_load_bus: return "flexibility at a bus without load";
  case ViolationKind::invalid_export_limits: return "invalid export limits";
  case ViolationKind::negative_weight: return "negative cost weight";
  case ViolationKind::empty_shed: return "empty energyshed";
  case ViolationKind::unknown_shed_bus: return "unknown bus in partition";
  case ViolationKind::sheds_not_disjoint: return "sheds not disjoint";
  case ViolationKind::uncovered_load_bus: return "load bus outside every energyshed";
  case ViolationKind::shed_not_connected: return "energyshed not connected";
  case ViolationKind::zero_demand_shed: return "zero-demand energyshed";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  for (const Violation& v : violations)
    if (v.kind == kind) return true;
  return false;
}

std::set<ViolationKind> ValidationReport::kinds() const {
  std::set<ViolationKind> out;
  for (const Violation& v : violations) out.insert(v.kind);
  return out;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const Violation& v : violations) a.push_back({{"kind", to_string(v.kind)}, {"where", v.where}, {"message", v.message}});
  return {{"valid", ok()}, {"violations", a}};
}

namespace {

class Checker {
public:
  explicit Checker(const Scenario& s) : s_(s) {}

  ValidationReport run() {
    check_network();
    const bool grid_ok = check_grid();
    if (grid_ok && check_dimensions()) {
      check_profiles();
      check_budgets();
      check_weights();
      check_partition();
    }
    return std::move(report_);
  }

private:
  void add(ViolationKind kind, std::string where, std::string message = {}) {
    if (message.empty()) message = to_string(kind);
    report_.violations.push_back({kind, std::move(where), std::move(message)});
  }

  void check_network() {
    const Network& net = s_.network;
    if (!(net.base_mva > 0) || !std::isfinite(net.base_mva)) add(ViolationKind::invalid_base_mva, "network");
    for (const Bus& b : net.buses) {
      if (ids_.count(b.id)) add(ViolationKind::duplicate_bus, fmt::format("bus {}", b.id));
      ids_.insert(b.id);
    }
    if (!ids_.count(net.reference_bus))
      add(ViolationKind::missing_reference_bus, "network", fmt::format("reference bus {} does not exist", net.reference_bus));
    bool branches_ok = true;
    for (int e = 0; e < net.num_branches(); ++e) {
      const Branch& br = net.branches[static_cast<std::size_t>(e)];
      std::string why;
      if (!ids_.count(br.from) || !ids_.count(br.to))
        why = "unknown endpoint";
      else if (br.from == br.to)
        why = "self loop";
      else if (!(br.reactance > 0) || !std::isfinite(br.reactance))
        why = "nonpositive reactance";
      else if (!(br.flow_limit >= 0))
        why = "negative flow limit";
      if (!why.empty()) {
        branches_ok = false;
        add(ViolationKind::invalid_branch, fmt::format("branch {} ({}-{})", e + 1, br.from, br.to), why);
      }
    }
    if (branches_ok && !net.buses.empty() && !net.connected()) add(ViolationKind::network_disconnected, "network");
  }

  bool check_grid() {
    if (s_.grid.steps >= 1 && s_.grid.step_hours > 0 && std::isfinite(s_.grid.step_hours)) return true;
    add(ViolationKind::invalid_time_grid, "time grid");
    return false;
  }

  bool check_dimensions() {
    const Eigen::Index n = s_.network.num_buses(), T = s_.grid.steps;
    bool ok = true;
    auto matrix = [&](const Matrix& m, const char* what) {
      if (m.rows() != n || m.cols() != T) {
        ok = false;
        add(ViolationKind::dimension_mismatch, what,
            fmt::format("{} is {}x{}, expected {}x{}", what, m.rows(), m.cols(), n, T));
      }
    };
    auto vector = [&](const Eigen::VectorXd& v, const char* what) {
      if (v.size() != n) {
        ok = false;
        add(ViolationKind::dimension_mismatch, what, fmt::format("{} has length {}, expected {}", what, v.size(), n));
      }
    };
    matrix(s_.profiles.gen, "gen profile");
    matrix(s_.profiles.load, "load profile");
    matrix(s_.budget.cap_plus, "cap_plus");
    matrix(s_.budget.cap_minus, "cap_minus");
    if (s_.budget.export_limits) {
      matrix(s_.budget.export_limits->upper, "export upper limit");
      matrix(s_.budget.export_limits->lower, "export lower limit");
    }
    vector(s_.weights.alpha, "alpha");
    vector(s_.weights.beta, "beta");
    return ok;
  }

  template <class F>
  void each_entry(const Matrix& m, F&& f) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index t = 0; t < m.cols(); ++t) f(static_cast<int>(i), static_cast<int>(t), m(i, t));
  }

  std::string at(int i, int t) const {
    return fmt::format("bus {} step {}", s_.network.buses[static_cast<std::size_t>(i)].id, t + 1);
  }

  void check_profiles() {
    for (const auto* m : {&s_.profiles.gen, &s_.profiles.load})
      each_entry(*m, [&](int i, int t, double v) {
        if (!(v >= 0) || !std::isfinite(v)) add(ViolationKind::negative_profile, at(i, t));
      });
    for (int i = 0; i < s_.network.num_buses(); ++i)
      if (!s_.network.buses[static_cast<std::size_t>(i)].has_load && s_.profiles.load.row(i).sum() > 0)
        add(ViolationKind::load_flag_mismatch, fmt::format("bus {}", s_.network.buses[static_cast<std::size_t>(i)].id));
  }

  void check_budgets() {
    for (const auto* m : {&s_.budget.cap_plus, &s_.budget.cap_minus})
      each_entry(*m, [&](int i, int t, double v) {
        if (!(v >= 0) || !std::isfinite(v))
          add(ViolationKind::negative_budget, at(i, t));
        else if (v > 0 && s_.flex_only_at_load_buses && !s_.network.buses[static_cast<std::size_t>(i)].has_load)
          add(ViolationKind::flex_at_non_load_bus, at(i, t));
      });
    if (const auto& lim = s_.budget.export_limits) {
      each_entry(lim->upper, [&](int i, int t, double hi) {
        const double lo = lim->lower(i, t);
        if (std::isnan(hi) || std::isnan(lo) || lo > hi || hi == -INFINITY || lo == INFINITY)
          add(ViolationKind::invalid_export_limits, at(i, t));
      });
    }
  }

  void check_weights() {
    for (const auto* v : {&s_.weights.alpha, &s_.weights.beta})
      for (Eigen::Index i = 0; i < v->size(); ++i)
        if (!((*v)[i] >= 0) || !std::isfinite((*v)[i]))
          add(ViolationKind::negative_weight, fmt::format("bus {}", s_.network.buses[static_cast<std::size_t>(i)].id));
  }

  void check_partition() {
    std::map<int, std::size_t> owner;
    for (std::size_t k = 0; k < s_.partition.sheds.size(); ++k) {
      const Shed& shed = s_.partition.sheds[k];
      const std::string where = fmt::format("energyshed {}", shed.name);
      if (shed.buses.empty()) {
        add(ViolationKind::empty_shed, where);
        continue;
      }
      std::set<int> nodes;
      bool known = true;
      for (int id : shed.buses) {
        if (!ids_.count(id)) {
          known = false;
          add(ViolationKind::unknown_shed_bus, where, fmt::format("bus {} does not exist", id));
          continue;
        }
        if (!nodes.insert(id).second) continue;
        const auto [it, fresh] = owner.emplace(id, k);
        if (!fresh)
          add(ViolationKind::sheds_not_disjoint, where,
              fmt::format("bus {} also belongs to {}", id, s_.partition.sheds[it->second].name));
      }
      if (!known) continue;
      if (!induced_subgraph_connected(s_.network, nodes)) add(ViolationKind::shed_not_connected, where);
      double demand = 0.0;
      for (int id : nodes) demand += s_.profiles.load.row(s_.network.index_of(id)).sum();
      if (!(demand > 0)) add(ViolationKind::zero_demand_shed, where);
    }
    for (const Bus& b : s_.network.buses)
      if (b.has_load && !owner.count(b.id)) add(ViolationKind::uncovered_load_bus, fmt::format("bus {}", b.id));
  }

  const Scenario& s_;
  std::set<int> ids_;
  ValidationReport report_;
};

} // namespace

ValidationReport validate_scenario(const Scenario& scenario) { return Checker(scenario).run(); }

} // namespace eshed::net
