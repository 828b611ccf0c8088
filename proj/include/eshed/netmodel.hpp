#pragma once

// Network, time-series, budget and partition data shared by every solver.
// Power quantities are per-unit on base_mva; energy = power * step_hours.

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace eshed::net {

using Matrix = Eigen::MatrixXd; // bus index x time step

struct Bus {
  int id = 0;
  bool has_load = false;
};

struct Branch {
  int from = 0;
  int to = 0;
  double reactance = 0.0;
  double flow_limit = 0.0; ///< p.u.; +inf when the case file says rateA = 0
  double rating_mva = 0.0; ///< rateA as written in the case file
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  double base_mva = 100.0;
  int reference_bus = 0;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }
  /// Position of bus `id` in `buses`; throws ValidationError for unknown ids.
  int index_of(int id) const;
  bool has_bus(int id) const;
  bool connected() const;

  bool operator==(const Network&) const;
};

bool operator==(const Bus& a, const Bus& b);
bool operator==(const Branch& a, const Branch& b);

/// Reads the baseMVA/bus/branch subset of a MATPOWER case. Anything else is
/// skipped; a note is appended to `warnings` when given.
Network parse_matpower_case(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Writes the same subset back out. Bus rows carry type 3 for the reference
/// bus and Pd = 1 for buses with load, so has_load and the reference survive.
std::string serialize_matpower_case(const Network& network);

/// True iff the buses in `nodes` induce a connected subgraph.
bool induced_subgraph_connected(const Network& network, const std::set<int>& nodes);

struct TimeGrid {
  int steps = 24;
  double step_hours = 1.0;
};

struct Profiles {
  Matrix gen;
  Matrix load;
};

/// CSV with header `bus,kind,t1..tN` (kind is load or gen). Rows may repeat a
/// bus for different kinds; unlisted buses stay zero.
Profiles parse_profiles(std::string_view csv, const Network& network, const TimeGrid& grid);

struct ExportLimits {
  Matrix upper; ///< +inf entries are unbounded
  Matrix lower; ///< -inf entries are unbounded
};

struct FlexBudget {
  Matrix cap_plus;
  Matrix cap_minus;
  std::optional<ExportLimits> export_limits;
};

struct CostWeights {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

struct Shed {
  std::string name;
  std::vector<int> buses; ///< bus ids
};

struct Partition {
  std::vector<Shed> sheds;
};

struct Scenario {
  Network network;
  TimeGrid grid;
  Profiles profiles;
  FlexBudget budget;
  CostWeights weights;
  Partition partition;
  bool flex_only_at_load_buses = true;

  int num_sheds() const { return static_cast<int>(partition.sheds.size()); }
  /// Bus indices of shed k; throws ValidationError when k is out of range.
  std::vector<int> shed_indices(int k) const;
};

enum class ViolationKind {
  invalid_base_mva,
  duplicate_bus,
  missing_reference_bus,
  invalid_branch,
  network_disconnected,
  invalid_time_grid,
  dimension_mismatch,
  negative_profile,
  load_flag_mismatch,
  negative_budget,
  flex_at_non_load_bus,
  invalid_export_limits,
  negative_weight,
  empty_shed,
  unknown_shed_bus,
  sheds_not_disjoint,
  uncovered_load_bus,
  shed_not_connected,
  zero_demand_shed,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::set<ViolationKind> kinds() const;
  nlohmann::json to_json() const;
};

ValidationReport validate_scenario(const Scenario& scenario);

/// gamma_k: load energy of shed k over the horizon.
double total_demand(const Scenario& scenario, int shed);
/// Base generation energy of shed k over the horizon.
double total_generation(const Scenario& scenario, int shed);
/// X0_k = generation / demand with no flexibility. Throws on zero demand.
double baseline_ratio(const Scenario& scenario, int shed);
/// Ratio of shed k with the given flexibility dispatch (bus x time).
double shed_ratio(const Scenario& scenario, int shed, const Matrix& s_plus, const Matrix& s_minus);

struct ScenarioFile {
  Scenario scenario;
  std::vector<std::filesystem::path> inputs; ///< json, case and profile paths
  std::vector<double> zeta_grid;             ///< empty when the file gives none
  std::vector<std::string> warnings;
};

/// Loads a scenario JSON; `case_file` and `profiles_file` resolve relative to it.
/// Only structural problems throw; invariants are left to validate_scenario.
ScenarioFile load_scenario(const std::filesystem::path& path);
ScenarioFile scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

std::string read_text_file(const std::filesystem::path& path);

} // namespace eshed::net
