#include "eshed/policy.hpp"

#include "eshed/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace eshed::policy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDoublings = 60;

int worker_count(int requested, std::size_t tasks) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, static_cast<int>(std::max<std::size_t>(tasks, 1)));
}

// Runs body(i) for i in [0, count). The first exception in index order is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = worker_count(threads, count);
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool probe_feasible(const Scenario& s, double tau, const qp::SolverConfig& solver) {
  return qp::check_feasibility(problems::build_p3(s, tau).program, solver).feasible;
}

struct Evaluation {
  double cost = kInf;
  std::optional<OperationReport> report;
};

Evaluation evaluate(const Scenario& s, double tau, const qp::SolverConfig& solver) {
  problems::P1Result r =
      problems::solve_p1(s, std::vector<double>(static_cast<std::size_t>(s.num_sheds()), tau), solver);
  switch (r.solution.status) {
  case qp::SolveStatus::optimal: return {r.report->cost, std::move(r.report)};
  case qp::SolveStatus::infeasible: return {};
  case qp::SolveStatus::max_iter: break;
  }
  throw SolverError(
      fmt::format("P1 at tau = {} stopped after {} iterations without a verdict", tau, r.solution.iterations));
}

// P1 costs on the integer grid tau = tau_lo + key * mesh / 10^refine_rounds,
// shared by every zeta of a Pareto sweep.
class CostSweep {
public:
  CostSweep(const Scenario& s, const PolicyConfig& cfg) : s_(s), cfg_(cfg) {
    for (int r = 0; r < cfg.refine_rounds; ++r) per_mesh_ *= 10;
    step_ = cfg.mesh / static_cast<double>(per_mesh_);
    mesh_points_ = static_cast<long>(std::ceil((cfg.tau_hi - cfg.tau_lo) / cfg.mesh - 1e-9));
    max_key_ = mesh_points_ * per_mesh_;
  }

  double tau(long key) const {
    return key >= max_key_ ? cfg_.tau_hi : cfg_.tau_lo + static_cast<double>(key) * step_;
  }

  void ensure(const std::set<long>& keys) {
    std::vector<long> missing;
    for (long k : keys)
      if (!cache_.count(k)) missing.push_back(k);
    std::vector<Evaluation> out(missing.size());
    parallel_for(missing.size(), cfg_.threads,
                 [&](std::size_t i) { out[i] = evaluate(s_, tau(missing[i]), cfg_.solver); });
    for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], std::move(out[i]));
  }

  const Evaluation& at(long key) const { return cache_.at(key); }

  std::set<long> mesh_keys() const {
    std::set<long> keys;
    for (long i = 0; i <= mesh_points_; ++i) keys.insert(i * per_mesh_);
    return keys;
  }

  // centre +- 1..9 strides, the stride a tenth of the previous round's
  std::set<long> local_keys(long centre, int round) const {
    long stride = per_mesh_;
    for (int r = 0; r < round; ++r) stride /= 10;
    std::set<long> keys;
    for (long j = -9; j <= 9; ++j) {
      const long k = centre + j * stride;
      if (k >= 0 && k <= max_key_) keys.insert(k);
    }
    return keys;
  }

private:
  const Scenario& s_;
  const PolicyConfig& cfg_;
  long per_mesh_ = 1;
  double step_ = 0.0;
  long mesh_points_ = 0;
  long max_key_ = 0;
  std::map<long, Evaluation> cache_;
};

double f_of(double tau, double cost, double zeta) { return std::isfinite(cost) ? tau - cost / zeta : -kInf; }

PolicyResult sweep_p4(CostSweep& sweep, double zeta, const PolicyConfig& cfg, double cost0) {
  if (!(zeta > 0) || !std::isfinite(zeta)) throw ValidationError(fmt::format("zeta {} must be positive", zeta));
  // ascending keys with a strict comparison: ties go to the smallest tau
  auto argmax = [&](const std::set<long>& keys) {
    long best = -1;
    double best_f = -kInf;
    for (long k : keys) {
      const double f = f_of(sweep.tau(k), sweep.at(k).cost, zeta);
      if (f > best_f) {
        best = k;
        best_f = f;
      }
    }
    return best;
  };

  std::set<long> visited = sweep.mesh_keys();
  sweep.ensure(visited);
  long best = argmax(visited);
  if (best < 0) throw InfeasibleError("P1 is infeasible at every tau on the mesh");
  for (int round = 1; round <= cfg.refine_rounds; ++round) {
    const std::set<long> local = sweep.local_keys(best, round);
    sweep.ensure(local);
    visited.insert(local.begin(), local.end());
    best = argmax(visited);
  }

  PolicyResult r;
  r.kind = Kind::p4;
  r.tau_star = sweep.tau(best);
  r.cost = sweep.at(best).cost;
  r.f_star = f_of(r.tau_star, r.cost, zeta);
  r.baseline_cost = cost0;
  r.cost_normalized = normalized_cost(r.cost, cost0);
  r.report = *sweep.at(best).report;
  for (long k : visited) {
    const double c = sweep.at(k).cost;
    r.trace.push_back({sweep.tau(k), std::isfinite(c), f_of(sweep.tau(k), c, zeta), c});
  }
  r.probes = static_cast<int>(visited.size());
  return r;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

void PolicyConfig::check() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be positive");
  if (!(tau_lo >= 0) || !std::isfinite(tau_lo) || !std::isfinite(tau_hi) || !(tau_lo < tau_hi))
    throw ValidationError(fmt::format("tau bracket [{}, {}] must satisfy 0 <= tau_lo < tau_hi", tau_lo, tau_hi));
  if (!(mesh > 0) || !std::isfinite(mesh)) throw ValidationError("mesh must be positive");
  if (refine_rounds < 0 || refine_rounds > 6) throw ValidationError("refine_rounds must lie in 0..6");
  if (threads < 0) throw ValidationError("threads must be nonnegative");
  for (double z : zeta_grid)
    if (!(z > 0) || !std::isfinite(z)) throw ValidationError(fmt::format("zeta {} must be positive", z));
  solver.check();
}

const char* to_string(Kind kind) { return kind == Kind::p2 ? "p2" : "p4"; }

double normalized_cost(double cost, double cost0) {
  if (cost0 > 0) return cost / cost0;
  return cost <= 0 ? 1.0 : kInf;
}

Baseline baseline(const Scenario& s, const qp::SolverConfig& solver) {
  Evaluation e = evaluate(s, 0.0, solver);
  if (!e.report) throw InfeasibleError("the base case (all ratio floors at zero) is infeasible");
  return {e.cost, std::move(*e.report)};
}

PolicyResult solve_p2(const Scenario& s, const PolicyConfig& cfg) {
  cfg.check();
  PolicyResult r;
  r.kind = Kind::p2;
  auto probe = [&](double tau) {
    const bool ok = probe_feasible(s, tau, cfg.solver);
    r.trace.push_back({tau, ok});
    ++r.probes;
    return ok;
  };

  double lo = cfg.tau_lo, hi = cfg.tau_hi;
  bool lo_known = false;
  if (cfg.expand_bracket) {
    for (int k = 0; probe(hi); ++k) {
      if (k == kMaxDoublings) throw SolverError("bracket expansion did not find an infeasible tau");
      lo = hi;
      lo_known = true;
      hi *= 2;
    }
  }
  while (hi - lo > cfg.epsilon) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) {
      lo = mid;
      lo_known = true;
    } else {
      hi = mid;
    }
  }
  if (!lo_known && !probe(lo))
    throw InfeasibleError(fmt::format("no feasible ratio floor: tau_lo = {} is infeasible", lo));

  r.tau_star = lo;
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  // phase one accepts points a hair past the frontier, where P1 may not reach
  // a verdict; the report then comes from inside the final bracket
  std::optional<Evaluation> e;
  for (double back : {0.0, 0.5, 1.0}) {
    const double tau = std::max(cfg.tau_lo, lo - back * cfg.epsilon);
    try {
      Evaluation got = evaluate(s, tau, cfg.solver);
      if (got.report) {
        e = std::move(got);
        break;
      }
    } catch (const SolverError&) {
      if (back == 1.0) throw;
    }
  }
  if (!e)
    throw SolverError(fmt::format("P1 at the bisection result tau = {} is infeasible though P3 was feasible", lo));
  r.cost = e->cost;
  r.report = std::move(*e->report);
  r.baseline_cost = baseline(s, cfg.solver).cost;
  r.cost_normalized = normalized_cost(r.cost, r.baseline_cost);
  return r;
}

PolicyResult solve_p4(const Scenario& s, double zeta, const PolicyConfig& cfg) {
  cfg.check();
  const double cost0 = baseline(s, cfg.solver).cost;
  CostSweep sweep(s, cfg);
  return sweep_p4(sweep, zeta, cfg, cost0);
}

ParetoFront pareto_front(const Scenario& s, const PolicyConfig& cfg) {
  cfg.check();
  if (cfg.zeta_grid.empty()) throw ValidationError("zeta grid is empty");
  if (!std::is_sorted(cfg.zeta_grid.begin(), cfg.zeta_grid.end()))
    throw ValidationError("zeta grid must be sorted ascending");
  const double cost0 = baseline(s, cfg.solver).cost;
  CostSweep sweep(s, cfg);
  ParetoFront front;
  for (double zeta : cfg.zeta_grid) {
    PolicyResult r = sweep_p4(sweep, zeta, cfg, cost0);
    if (!front.points.empty() && r.tau_star < front.points.back().tau_star) front.tau_monotone = false;
    front.points.push_back({zeta, r.tau_star, r.f_star, r.cost, r.cost_normalized});
    front.results.push_back(std::move(r));
  }
  return front;
}

bool feasibility_monotone(const std::vector<TracePoint>& trace) {
  double lowest_infeasible = kInf;
  for (const TracePoint& p : trace)
    if (!p.feasible) lowest_infeasible = std::min(lowest_infeasible, p.tau);
  for (const TracePoint& p : trace)
    if (p.feasible && p.tau > lowest_infeasible) return false;
  return true;
}

std::string p2_trace_csv(const PolicyResult& r) {
  std::string out = "tau,feasible\n";
  for (const TracePoint& p : r.trace) out += fmt::format("{},{}\n", num(p.tau), p.feasible ? 1 : 0);
  return out;
}

std::string p4_trace_csv(const PolicyResult& r) {
  std::string out = "tau,f_tau,cost\n";
  for (const TracePoint& p : r.trace) out += fmt::format("{},{},{}\n", num(p.tau), num(p.f), num(p.cost));
  return out;
}

std::string pareto_csv(const ParetoFront& front) {
  std::string out = "zeta,tau_star,cost_normalized\n";
  for (const ParetoPoint& p : front.points)
    out += fmt::format("{},{},{}\n", num(p.zeta), num(p.tau_star), num(p.cost_normalized));
  return out;
}

nlohmann::json to_json(const PolicyResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const TracePoint& p : r.trace) {
    nlohmann::json t = {{"tau", p.tau}, {"feasible", p.feasible}};
    if (r.kind == Kind::p4) {
      t["f_tau"] = jnum(p.f);
      t["cost"] = jnum(p.cost);
    }
    trace.push_back(t);
  }
  nlohmann::json j = {{"kind", to_string(r.kind)},
                      {"tau_star", r.tau_star},
                      {"cost", r.cost},
                      {"baseline_cost", r.baseline_cost},
                      {"cost_normalized", jnum(r.cost_normalized)},
                      {"probes", r.probes},
                      {"trace", trace},
                      {"report", problems::to_json(r.report)}};
  if (r.kind == Kind::p2) j["bracket"] = {r.bracket_lo, r.bracket_hi};
  else j["f_star"] = jnum(r.f_star);
  return j;
}

} // namespace eshed::policy
