#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace eshed::net {

namespace {

using nlohmann::json;

double number_or(const json& v, double null_value, const std::string& key) {
  if (v.is_null()) return null_value;
  if (!v.is_number()) throw ValidationError(fmt::format("{}: expected a number", key));
  return v.get<double>();
}

// Scalar, per-bus array or bus x time nested array. Shapes that do not match
// (rows, cols) come back as-is so validation can report them.
Matrix bus_time_matrix(const json& v, int rows, int cols, double null_value, const std::string& key) {
  if (v.is_number() || v.is_null()) return Matrix::Constant(rows, cols, number_or(v, null_value, key));
  if (!v.is_array()) throw ValidationError(fmt::format("{}: expected a number or an array", key));
  const int n = static_cast<int>(v.size());
  const bool nested = n > 0 && v[0].is_array();
  if (!nested) {
    Matrix m(n, cols);
    for (int i = 0; i < n; ++i) m.row(i).setConstant(number_or(v[i], null_value, key));
    return m;
  }
  const int width = static_cast<int>(v[0].size());
  Matrix m(n, width);
  for (int i = 0; i < n; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != width)
      throw ValidationError(fmt::format("{}: ragged nested array at row {}", key, i));
    for (int t = 0; t < width; ++t) m(i, t) = number_or(v[i][t], null_value, key);
  }
  return m;
}

Eigen::VectorXd bus_vector(const json& v, int n, const std::string& key) {
  if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
  if (!v.is_array()) throw ValidationError(fmt::format("{}: expected a number or an array", key));
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number_or(v[i], 0.0, key);
  return out;
}

int steps_from_header(std::string_view csv) {
  const std::size_t nl = csv.find('\n');
  const std::string_view head = csv.substr(0, nl);
  const auto commas = std::count(head.begin(), head.end(), ',');
  if (commas < 2) throw ValidationError("profiles header has no time columns");
  return static_cast<int>(commas) - 1;
}

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(fmt::format("scenario is missing '{}'", key));
  return j.at(key);
}

} // namespace

ScenarioFile scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  ScenarioFile out;
  Scenario& s = out.scenario;

  const auto case_path = base_dir / require(j, "case_file").get<std::string>();
  const auto profiles_path = base_dir / require(j, "profiles_file").get<std::string>();
  out.inputs = {case_path, profiles_path};

  s.network = parse_matpower_case(read_text_file(case_path), &out.warnings);
  if (j.contains("reference_bus")) s.network.reference_bus = j.at("reference_bus").get<int>();

  const std::string csv = read_text_file(profiles_path);
  s.grid.step_hours = require(j, "step_hours").get<double>();
  s.grid.steps = j.contains("steps") ? j.at("steps").get<int>() : steps_from_header(csv);
  if (s.grid.steps < 1 || !(s.grid.step_hours > 0))
    throw ValidationError("time grid needs steps >= 1 and step_hours > 0");
  s.profiles = parse_profiles(csv, s.network, s.grid);

  const int n = s.network.num_buses(), T = s.grid.steps;
  constexpr double inf = std::numeric_limits<double>::infinity();
  s.budget.cap_plus = bus_time_matrix(require(j, "cap_plus"), n, T, 0.0, "cap_plus");
  s.budget.cap_minus = bus_time_matrix(require(j, "cap_minus"), n, T, 0.0, "cap_minus");
  if (j.contains("export_limits") && !j.at("export_limits").is_null()) {
    const json& e = j.at("export_limits");
    ExportLimits lim;
    lim.upper = bus_time_matrix(e.contains("upper") ? e.at("upper") : json(), n, T, inf, "export_limits.upper");
    lim.lower = bus_time_matrix(e.contains("lower") ? e.at("lower") : json(), n, T, -inf, "export_limits.lower");
    s.budget.export_limits = lim;
  }
  s.weights.alpha = bus_vector(require(j, "alpha"), n, "alpha");
  s.weights.beta = bus_vector(require(j, "beta"), n, "beta");
  s.flex_only_at_load_buses = j.value("flex_only_at_load_buses", true);

  const json& part = require(j, "partition");
  if (!part.is_array()) throw ValidationError("partition must be an array");
  for (std::size_t k = 0; k < part.size(); ++k) {
    Shed shed;
    const json& entry = part[k];
    if (entry.is_object()) {
      shed.name = entry.value("name", "");
      shed.buses = entry.at("buses").get<std::vector<int>>();
    } else {
      shed.buses = entry.get<std::vector<int>>();
    }
    if (shed.name.empty()) shed.name = fmt::format("S{}", k + 1);
    s.partition.sheds.push_back(std::move(shed));
  }

  if (j.contains("zeta_grid")) out.zeta_grid = j.at("zeta_grid").get<std::vector<double>>();
  return out;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what());
  }
  ScenarioFile out;
  try {
    out = scenario_from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario JSON: ") + e.what());
  }
  out.inputs.insert(out.inputs.begin(), path);
  return out;
}

std::vector<int> Scenario::shed_indices(int k) const {
  if (k < 0 || k >= num_sheds()) throw ValidationError(fmt::format("no energyshed with index {}", k));
  std::vector<int> idx;
  for (int id : partition.sheds[static_cast<std::size_t>(k)].buses) idx.push_back(network.index_of(id));
  return idx;
}

double total_demand(const Scenario& s, int shed) {
  double sum = 0.0;
  for (int i : s.shed_indices(shed)) sum += s.profiles.load.row(i).sum();
  return sum * s.grid.step_hours;
}

double total_generation(const Scenario& s, int shed) {
  double sum = 0.0;
  for (int i : s.shed_indices(shed)) sum += s.profiles.gen.row(i).sum();
  return sum * s.grid.step_hours;
}

double baseline_ratio(const Scenario& s, int shed) {
  const double gamma = total_demand(s, shed);
  if (!(gamma > 0)) throw ValidationError(fmt::format("zero-demand energyshed {}", shed));
  return total_generation(s, shed) / gamma;
}

double shed_ratio(const Scenario& s, int shed, const Matrix& s_plus, const Matrix& s_minus) {
  double num = 0.0, den = 0.0;
  for (int i : s.shed_indices(shed)) {
    num += s.profiles.gen.row(i).sum() + s_plus.row(i).sum();
    den += s.profiles.load.row(i).sum() + s_minus.row(i).sum();
  }
  if (!(den > 0)) throw ValidationError(fmt::format("zero-demand energyshed {}", shed));
  return num / den;
}

} // namespace eshed::net
