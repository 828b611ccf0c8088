#include "eshed/cli.hpp"

#include "eshed/analytic.hpp"
#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"
#include "eshed/policy.hpp"
#include "eshed/problems.hpp"

#include <Eigen/Core>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#ifndef ESHED_VERSION
#define ESHED_VERSION "unknown"
#endif

namespace eshed::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::pair<Command, const char*> kCommands[] = {
    {Command::analyze, "analyze"},     {Command::solve_p1, "solve-p1"}, {Command::design_p2, "design-p2"},
    {Command::design_p4, "design-p4"}, {Command::pareto, "pareto"},     {Command::baseline, "baseline"},
    {Command::validate, "validate"},
};

// budgets for `analyze`, as fractions of total demand
constexpr int kCurveSteps = 40;
constexpr int kCurvePoints = 61;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string file_stem(const std::string& name, std::set<std::string>& used) {
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
  if (out.empty()) out = "shed";
  std::string candidate = out;
  for (int k = 2; !used.insert(candidate).second; ++k) candidate = fmt::format("{}_{}", out, k);
  return candidate;
}

// Collects everything that ends up in manifest.json.
class RunRecord {
public:
  RunRecord(const CommandSpec& spec) : spec_(spec) {}

  std::string read_input(const fs::path& path) {
    std::string bytes = net::read_text_file(path);
    hashes_[path.lexically_normal().generic_string()] = sha256_hex(bytes);
    return bytes;
  }

  void hash_inputs(const std::vector<fs::path>& paths) {
    for (const fs::path& p : paths)
      if (!hashes_.count(p.lexically_normal().generic_string())) read_input(p);
  }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(spec_.output_dir);
    std::ofstream f(spec_.output_dir / name, std::ios::binary);
    f << content;
    if (!f) throw Error(fmt::format("cannot write {}", (spec_.output_dir / name).string()));
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  json config = json::object();

  void finish(int code, const std::string& error) {
    json inputs = json::array();
    std::string combined;
    for (const auto& [path, hash] : hashes_) {
      inputs.push_back({{"path", path}, {"sha256", hash}});
      combined += path + '\0' + hash + '\n';
    }
    json m = {{"tool", "eshed"},
              {"command", to_string(spec_.command)},
              {"exit_code", code},
              {"status", status_name(code)},
              {"inputs", inputs},
              {"inputs_sha256", sha256_hex(combined)},
              {"config", config},
              {"outputs", outputs_},
              {"versions", versions()},
              {"timestamp", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                                   std::chrono::system_clock::now())))}};
    if (!error.empty()) m["error"] = error;
    fs::create_directories(spec_.output_dir);
    std::ofstream f(spec_.output_dir / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
    if (!f) throw Error("cannot write manifest.json");
  }

private:
  static const char* status_name(int code) {
    switch (code) {
    case exit_code::ok: return "ok";
    case exit_code::validation: return "validation_failed";
    case exit_code::infeasible: return "infeasible";
    case exit_code::solver: return "solver_failed";
    default: return "error";
    }
  }

  static json versions() {
    return {{"eshed", ESHED_VERSION},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100, FMT_VERSION % 100)},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)},
            {"openssl", OpenSSL_version(OPENSSL_VERSION)},
            {"compiler", __VERSION__}};
  }

  const CommandSpec& spec_;
  std::map<std::string, std::string> hashes_;
  std::vector<std::string> outputs_;
};

json solver_json(const qp::SolverConfig& s) {
  return {{"tol_primal", s.tol_primal}, {"tol_dual", s.tol_dual}, {"tol_gap", s.tol_gap},
          {"max_iter", s.max_iter},     {"polish", s.polish}};
}

std::vector<double> resolve_x_min(const CommandSpec& spec, const net::Scenario& s, RunRecord& rec) {
  const auto n = static_cast<std::size_t>(s.num_sheds());
  if (!spec.x_min) return std::vector<double>(n, 0.0);
  if (auto v = parse_double(*spec.x_min)) return std::vector<double>(n, *v);
  const json j = json::parse(rec.read_input(*spec.x_min));
  std::vector<double> out;
  if (j.is_array()) {
    out = j.get<std::vector<double>>();
    if (out.size() != n)
      throw ValidationError(fmt::format("--x-min file gives {} values for {} energysheds", out.size(), n));
  } else if (j.is_object()) {
    for (const net::Shed& shed : s.partition.sheds) {
      if (!j.contains(shed.name)) throw ValidationError(fmt::format("--x-min file has no entry for '{}'", shed.name));
      out.push_back(j.at(shed.name).get<double>());
    }
    if (j.size() != n) throw ValidationError("--x-min file names energysheds that are not in the partition");
  } else {
    throw ValidationError("--x-min must be a number or a JSON array/object file");
  }
  return out;
}

std::vector<double> read_zeta_grid(const fs::path& path, RunRecord& rec) {
  const std::string text = rec.read_input(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return json::parse(text).get<std::vector<double>>();
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    auto v = parse_double(token);
    if (!v) throw ValidationError(fmt::format("zeta grid: '{}' is not a number", token));
    out.push_back(*v);
    token.clear();
  };
  for (char ch : text) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) flush();
    else token += ch;
  }
  flush();
  return out;
}

policy::PolicyConfig policy_config(const CommandSpec& spec) {
  policy::PolicyConfig cfg;
  if (spec.epsilon) cfg.epsilon = *spec.epsilon;
  if (spec.mesh) cfg.mesh = *spec.mesh;
  cfg.threads = spec.threads;
  return cfg;
}

json policy_json(const policy::PolicyConfig& cfg) {
  return {{"epsilon", cfg.epsilon},     {"tau_lo", cfg.tau_lo},     {"tau_hi", cfg.tau_hi},
          {"mesh", cfg.mesh},           {"refine_rounds", cfg.refine_rounds},
          {"expand_bracket", cfg.expand_bracket}, {"threads", cfg.threads}, {"solver", solver_json(cfg.solver)}};
}

void write_report_tables(const problems::OperationReport& r, RunRecord& rec) {
  rec.write("bus_table.csv", problems::bus_table_csv(r));

  std::string sheds = "shed,ratio,baseline,floor\n";
  for (const problems::ShedReport& s : r.sheds)
    sheds += fmt::format("{},{},{},{}\n", csv_field(s.name), num(s.ratio), num(s.baseline), num(s.floor));
  rec.write("sheds.csv", sheds);

  std::string dispatch = "bus,step,s_plus_pu,s_minus_pu,s_plus_mw,s_minus_mw\n";
  for (Eigen::Index i = 0; i < r.s_plus.rows(); ++i)
    for (Eigen::Index t = 0; t < r.s_plus.cols(); ++t)
      dispatch += fmt::format("{},{},{},{},{},{}\n", r.buses[static_cast<std::size_t>(i)].id, t + 1, r.s_plus(i, t),
                              r.s_minus(i, t), r.s_plus(i, t) * r.base_mva, r.s_minus(i, t) * r.base_mva);
  rec.write("dispatch.csv", dispatch);

  std::string branches = "from,to,peak_flow_pu,peak_flow_mw,loading\n";
  for (const problems::BranchReport& b : r.branches)
    branches += fmt::format("{},{},{},{},{}\n", b.from, b.to, b.peak_flow, b.peak_flow * r.base_mva, b.loading);
  rec.write("branches.csv", branches);
}

struct Loaded {
  net::ScenarioFile file;
};

Loaded load(const CommandSpec& spec, RunRecord& rec, std::ostream& err) {
  rec.read_input(spec.scenario_path);
  Loaded l{net::load_scenario(spec.scenario_path)};
  rec.hash_inputs(l.file.inputs);
  for (const std::string& w : l.file.warnings) err << "warning: " << w << "\n";
  return l;
}

net::ValidationReport require_valid(const net::Scenario& s) {
  net::ValidationReport v = net::validate_scenario(s);
  if (!v.ok()) {
    const net::Violation& first = v.violations.front();
    throw ValidationError(fmt::format("invalid scenario: {}: {} at {} ({} violation(s))", net::to_string(first.kind),
                                      first.message, first.where, v.violations.size()));
  }
  return v;
}

int cmd_validate(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  const net::ValidationReport v = net::validate_scenario(l.file.scenario);
  if (spec.format == Format::json) {
    rec.write_json("validation.json", v.to_json());
  } else {
    std::string csv = "kind,where,message\n";
    for (const net::Violation& x : v.violations)
      csv += fmt::format("{},{},{}\n", net::to_string(x.kind), csv_field(x.where), csv_field(x.message));
    rec.write("validation.csv", csv);
  }
  for (const net::Violation& x : v.violations)
    err << fmt::format("violation: {} at {}: {}\n", net::to_string(x.kind), x.where, x.message);
  out << fmt::format("validate: {} violation(s)\n", v.violations.size());
  return v.ok() ? exit_code::ok : exit_code::validation;
}

int cmd_analyze(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  const net::Scenario& s = l.file.scenario;
  require_valid(s);
  const auto T = static_cast<std::size_t>(s.grid.steps);
  const double mwh = s.network.base_mva * s.grid.step_hours;
  rec.config["budget_shape"] = "load-proportional";
  rec.config["budget_grid"] = fmt::format("gamma * j / {} for j = 0..{}", kCurveSteps, kCurvePoints - 1);

  json sheds = json::array();
  std::set<std::string> stems;
  int written = 0;
  for (int k = 0; k < s.num_sheds(); ++k) {
    const std::vector<int> idx = s.shed_indices(k);
    analytic::CommunitySeries c;
    c.gen.assign(T, 0.0);
    c.load.assign(T, 0.0);
    c.cap_plus.assign(T, 0.0);
    bool finite_limits = s.budget.export_limits.has_value();
    std::vector<double> limit(T, 0.0);
    for (int i : idx)
      for (std::size_t t = 0; t < T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        c.gen[t] += s.profiles.gen(i, ti);
        c.load[t] += s.profiles.load(i, ti);
        if (finite_limits) {
          const double u = s.budget.export_limits->upper(i, ti);
          finite_limits = std::isfinite(u);
          limit[t] += u;
        }
      }
    const std::string& name = s.partition.sheds[static_cast<std::size_t>(k)].name;
    json entry = {{"name", name}, {"gamma", c.gamma()}, {"gamma_mwh", c.gamma() * mwh}, {"baseline", c.baseline()}};
    if (c.gamma() <= std::accumulate(c.gen.begin(), c.gen.end(), 0.0)) {
      err << fmt::format("warning: energyshed '{}' has no energy deficit; no capacity curve\n", name);
      entry["skipped"] = "no energy deficit";
      sheds.push_back(entry);
      continue;
    }
    std::vector<double> grid;
    for (int j = 0; j < kCurvePoints; ++j) grid.push_back(c.gamma() * j / kCurveSteps);

    std::vector<analytic::CurveMode> modes = {analytic::CurveMode::unconstrained, analytic::CurveMode::zero_export};
    if (finite_limits) {
      c.export_limit = limit;
      modes.insert(modes.begin() + 1, analytic::CurveMode::limits);
    }
    std::string csv = "budget,max_ratio,mode,budget_normalized,budget_mwh\n";
    json points = json::array();
    for (analytic::CurveMode mode : modes) {
      std::vector<analytic::CapacityCurvePoint> curve;
      try {
        curve = analytic::capacity_curve(c, grid, mode);
      } catch (const ValidationError& e) {
        err << fmt::format("warning: energyshed '{}', mode {}: {}\n", name, analytic::to_string(mode), e.what());
        continue;
      }
      for (const auto& p : curve) {
        csv += fmt::format("{},{},{},{},{}\n", p.budget, p.max_ratio, analytic::to_string(mode), p.budget_normalized,
                           p.budget * mwh);
        points.push_back({{"budget", p.budget},
                          {"budget_normalized", p.budget_normalized},
                          {"budget_mwh", p.budget * mwh},
                          {"max_ratio", p.max_ratio},
                          {"mode", analytic::to_string(mode)}});
      }
    }
    entry["points"] = points;
    sheds.push_back(entry);
    if (spec.format == Format::csv) rec.write(fmt::format("capacity_{}.csv", file_stem(name, stems)), csv);
    ++written;
  }
  if (spec.format == Format::json)
    rec.write_json("capacity.json", {{"budget_shape", "load-proportional"},
                                     {"base_mva", s.network.base_mva},
                                     {"step_hours", s.grid.step_hours},
                                     {"sheds", sheds}});
  out << fmt::format("analyze: capacity curves for {} of {} energyshed(s)\n", written, s.num_sheds());
  return exit_code::ok;
}

int cmd_solve_p1(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  const net::Scenario& s = l.file.scenario;
  const std::vector<double> x_min = resolve_x_min(spec, s, rec);
  const qp::SolverConfig solver;
  rec.config["x_min"] = x_min;
  rec.config["solver"] = solver_json(solver);

  problems::P1Result r = problems::solve_p1(s, x_min, solver);
  if (r.solution.status == qp::SolveStatus::infeasible)
    throw InfeasibleError("P1 is infeasible for the requested ratio floors");
  if (!r.report)
    throw SolverError(fmt::format("P1 stopped after {} iterations without a verdict", r.solution.iterations));
  if (spec.format == Format::json) {
    json j = problems::to_json(*r.report);
    j["x_min"] = x_min;
    rec.write_json("solve_p1.json", j);
  } else {
    write_report_tables(*r.report, rec);
    rec.write("summary.csv", fmt::format("cost,objective,balance_residual,flow_law_residual\n{},{},{},{}\n",
                                         r.report->cost, r.report->objective, r.report->balance_residual,
                                         r.report->flow_law_residual));
  }
  out << fmt::format("solve-p1: cost = {}\n", r.report->cost);
  return exit_code::ok;
}

int cmd_baseline(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  const qp::SolverConfig solver;
  rec.config["solver"] = solver_json(solver);
  const policy::Baseline b = policy::baseline(l.file.scenario, solver);
  if (spec.format == Format::json) {
    rec.write_json("baseline.json", {{"cost", b.cost}, {"report", problems::to_json(b.report)}});
  } else {
    write_report_tables(b.report, rec);
    rec.write("summary.csv", fmt::format("cost\n{}\n", b.cost));
  }
  out << fmt::format("baseline: cost = {}\n", b.cost);
  return exit_code::ok;
}

int cmd_design_p2(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  const policy::PolicyConfig cfg = policy_config(spec);
  rec.config["policy"] = policy_json(cfg);
  const policy::PolicyResult r = policy::solve_p2(l.file.scenario, cfg);
  if (!policy::feasibility_monotone(r.trace)) err << "warning: feasibility trace is not monotone in tau\n";
  if (spec.format == Format::json) {
    rec.write_json("design_p2.json", policy::to_json(r));
  } else {
    rec.write("p2_trace.csv", policy::p2_trace_csv(r));
    rec.write("summary.csv",
              fmt::format("tau_star,bracket_lo,bracket_hi,probes,cost,baseline_cost,cost_normalized\n{},{},{},{},{},{},{}\n",
                          r.tau_star, r.bracket_lo, r.bracket_hi, r.probes, r.cost, r.baseline_cost,
                          num(r.cost_normalized)));
    write_report_tables(r.report, rec);
  }
  out << fmt::format("design-p2: tau* = {} after {} probes, cost_normalized = {}\n", r.tau_star, r.probes,
                     num(r.cost_normalized));
  return exit_code::ok;
}

int cmd_design_p4(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  if (!spec.zeta) throw ValidationError("design-p4 needs --zeta");
  const Loaded l = load(spec, rec, err);
  const policy::PolicyConfig cfg = policy_config(spec);
  rec.config["policy"] = policy_json(cfg);
  rec.config["zeta"] = *spec.zeta;
  const policy::PolicyResult r = policy::solve_p4(l.file.scenario, *spec.zeta, cfg);
  if (spec.format == Format::json) {
    json j = policy::to_json(r);
    j["zeta"] = *spec.zeta;
    rec.write_json("design_p4.json", j);
  } else {
    rec.write("p4_trace.csv", policy::p4_trace_csv(r));
    rec.write("summary.csv",
              fmt::format("zeta,tau_star,f_star,cost,baseline_cost,cost_normalized,probes\n{},{},{},{},{},{},{}\n",
                          *spec.zeta, r.tau_star, num(r.f_star), r.cost, r.baseline_cost, num(r.cost_normalized),
                          r.probes));
    write_report_tables(r.report, rec);
  }
  out << fmt::format("design-p4: zeta = {}, tau* = {}, cost_normalized = {}\n", *spec.zeta, r.tau_star,
                     num(r.cost_normalized));
  return exit_code::ok;
}

int cmd_pareto(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  const Loaded l = load(spec, rec, err);
  policy::PolicyConfig cfg = policy_config(spec);
  cfg.zeta_grid = spec.zeta_grid_path ? read_zeta_grid(*spec.zeta_grid_path, rec) : l.file.zeta_grid;
  if (cfg.zeta_grid.empty()) throw ValidationError("pareto needs --zeta-grid or a zeta_grid in the scenario");
  rec.config["policy"] = policy_json(cfg);
  rec.config["zeta_grid"] = cfg.zeta_grid;
  const policy::ParetoFront f = policy::pareto_front(l.file.scenario, cfg);
  if (!f.tau_monotone) err << "warning: tau* is not monotone along the zeta grid\n";
  if (spec.format == Format::json) {
    json points = json::array();
    for (const policy::ParetoPoint& p : f.points)
      points.push_back({{"zeta", p.zeta},
                        {"tau_star", p.tau_star},
                        {"f_star", jnum(p.f_star)},
                        {"cost", p.cost},
                        {"cost_normalized", jnum(p.cost_normalized)}});
    rec.write_json("pareto.json", {{"points", points}, {"tau_monotone", f.tau_monotone}});
  } else {
    rec.write("pareto.csv", policy::pareto_csv(f));
  }
  out << fmt::format("pareto: {} point(s), tau* from {} to {}\n", f.points.size(), f.points.front().tau_star,
                     f.points.back().tau_star);
  return exit_code::ok;
}

int dispatch(const CommandSpec& spec, RunRecord& rec, std::ostream& out, std::ostream& err) {
  rec.config["scenario"] = spec.scenario_path.lexically_normal().generic_string();
  rec.config["format"] = to_string(spec.format);
  switch (spec.command) {
  case Command::analyze: return cmd_analyze(spec, rec, out, err);
  case Command::solve_p1: return cmd_solve_p1(spec, rec, out, err);
  case Command::design_p2: return cmd_design_p2(spec, rec, out, err);
  case Command::design_p4: return cmd_design_p4(spec, rec, out, err);
  case Command::pareto: return cmd_pareto(spec, rec, out, err);
  case Command::baseline: return cmd_baseline(spec, rec, out, err);
  case Command::validate: return cmd_validate(spec, rec, out, err);
  }
  throw ValidationError("unknown command");
}

} // namespace

const char* to_string(Command c) {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

const char* to_string(Format f) { return f == Format::csv ? "csv" : "json"; }

Command command_from_string(const std::string& s) {
  for (const auto& [cmd, name] : kCommands)
    if (s == name) return cmd;
  throw ValidationError(fmt::format("unknown command '{}'", s));
}

Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ValidationError(fmt::format("unknown format '{}' (csv or json)", s));
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& entry : kCommands) out.emplace_back(entry.second);
  return out;
}

void CommandSpec::check() const {
  if (scenario_path.empty()) throw ValidationError("--scenario is required");
  if (!fs::is_regular_file(scenario_path))
    throw ValidationError(fmt::format("scenario file {} does not exist", scenario_path.string()));
  if (output_dir.empty()) throw ValidationError("--out must not be empty");
  if (epsilon && !(*epsilon > 0)) throw ValidationError("--epsilon must be positive");
  if (mesh && !(*mesh > 0)) throw ValidationError("--mesh must be positive");
  if (zeta && !(*zeta > 0 && std::isfinite(*zeta))) throw ValidationError("--zeta must be positive");
  if (threads < 0) throw ValidationError("--threads must be nonnegative");
}

int resolve_threads(std::optional<int> flag, const char* env_value) {
  if (flag) {
    if (*flag < 0) throw ValidationError("--threads must be nonnegative");
    return *flag;
  }
  if (env_value == nullptr || *env_value == '\0') return 1;
  const std::string_view text(env_value);
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 0)
    throw ValidationError(fmt::format("ESHED_THREADS='{}' is not a nonnegative integer", text));
  return v;
}

std::string version() { return ESHED_VERSION; }

int run(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  RunRecord rec(spec);
  int code = exit_code::ok;
  std::string error;
  try {
    spec.check();
    code = dispatch(spec, rec, out, err);
  } catch (const ValidationError& e) {
    code = exit_code::validation;
    error = e.what();
  } catch (const ParseError& e) {
    code = exit_code::validation;
    error = e.what();
  } catch (const nlohmann::json::exception& e) {
    code = exit_code::validation;
    error = e.what();
  } catch (const InfeasibleError& e) {
    code = exit_code::infeasible;
    error = e.what();
  } catch (const SolverError& e) {
    code = exit_code::solver;
    error = e.what();
  } catch (const DimensionError& e) {
    code = exit_code::solver;
    error = e.what();
  } catch (const std::exception& e) {
    code = exit_code::usage;
    error = e.what();
  }
  if (!error.empty()) err << "error: " << error << "\n";
  try {
    rec.finish(code, error);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    if (code == exit_code::ok) code = exit_code::usage;
  }
  return code;
}

} // namespace eshed::cli
