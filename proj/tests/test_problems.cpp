#include <doctest.h>

#include "eshed/error.hpp"
#include "eshed/problems.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <chrono>

using namespace eshed;
using namespace eshed::problems;

namespace {

void check_solution_quality(const P1Result& r) {
  REQUIRE(r.solution.status == qp::SolveStatus::optimal);
  REQUIRE(r.report);
  const auto kkt = qp::kkt_residuals(r.p1.program, r.solution);
  CHECK(kkt.max() <= 1e-6);
  CHECK(r.report->balance_residual <= 1e-6);
  CHECK(r.report->flow_law_residual <= 1e-8);
  for (std::size_t k = 0; k < r.report->sheds.size(); ++k)
    CHECK(r.report->sheds[k].ratio >= r.p1.x_min[k] - 1e-6);
}

std::vector<double> uniform(const net::Scenario& s, double x) { return std::vector<double>(s.num_sheds(), x); }

net::Scenario bundled(const char* level) {
  return net::load_scenario(fixtures::data_path(std::string("scenario_39_") + level + ".json")).scenario;
}

} // namespace

TEST_CASE("layout of a 2-bus, 1-step program") {
  net::Scenario s = fixtures::two_bus_line({0.5}, {1.0}, {0.0}, {0.5});
  const P1Program p = build_p1(s, uniform(s, 0.0));
  CHECK(p.layout.size() == 11);
  CHECK(p.program.n == 11);
  CHECK(p.program.names[p.layout.flow(0, 0)] == "P[1-2,1]");
  CHECK(p.program.names[p.layout.cap_minus(1)] == "C-[2]");
  // balance per bus, one flow law, one reference pin
  CHECK(p.program.num_eq() == 4);
  std::vector<bool> seen(11, false);
  for (int i = 0; i < 2; ++i) {
    seen[p.layout.theta(i, 0)] = seen[p.layout.s_plus(i, 0)] = seen[p.layout.s_minus(i, 0)] = true;
    seen[p.layout.cap_plus(i)] = seen[p.layout.cap_minus(i)] = true;
  }
  seen[p.layout.flow(0, 0)] = true;
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("builder rejects bad floors and invalid scenarios") {
  net::Scenario s = fixtures::single_bus({0.2, 0.2}, {1, 1});
  CHECK_THROWS_AS(build_p1(s, {-0.1}), ValidationError);
  CHECK_THROWS_AS(build_p1(s, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(build_p3(s, -1.0), ValidationError);
  s.partition.sheds.push_back({"dup", {1}});
  CHECK_THROWS_WITH_AS(build_p1(s, {0.0, 0.0}), doctest::Contains("sheds not disjoint"), ValidationError);
}

TEST_CASE("zero budgets: feasible only when base generation balances") {
  // bus 1 exports exactly what bus 2 needs
  net::Scenario balanced = fixtures::two_bus_line({1.5, 1.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 0.5});
  const P1Result ok = solve_p1(balanced, uniform(balanced, 0.0));
  check_solution_quality(ok);
  CHECK(ok.report->cost == 0.0);

  net::Scenario short_gen = fixtures::two_bus_line({1.0, 1.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 0.5});
  CHECK(solve_p1(short_gen, uniform(short_gen, 0.0)).solution.status == qp::SolveStatus::infeasible);

  // same balance, but the line cannot carry it
  net::Scenario tight = fixtures::two_bus_line({1.5, 1.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 0.5}, 0.6);
  CHECK(solve_p1(tight, uniform(tight, 0.0)).solution.status == qp::SolveStatus::infeasible);
}

TEST_CASE("hand-solved two-bus instance") {
  // bus 2 needs 1.0 each step; bus 1 (alpha 1) and bus 2 (alpha 3) can both supply.
  // Unconstrained: C1 = 0.75, C2 = 0.25, cost 0.75 = 0.5625 + 0.1875.
  net::Scenario s = fixtures::two_bus_line({0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0});
  s.network.buses[0].has_load = true;
  s.profiles.load(0, 0) = s.profiles.load(0, 1) = 1e-9;
  s.partition.sheds = {{"B", {1, 2}}};
  s.budget.cap_plus.setConstant(2.0);
  s.weights.alpha << 1.0, 3.0;
  const P1Result r = solve_p1(s, {0.0});
  check_solution_quality(r);
  CHECK(r.report->buses[0].cap_plus == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(r.report->buses[1].cap_plus == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(r.report->cost == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(r.report->cost == doctest::Approx(r.solution.objective).epsilon(1e-7));

  // a line limit of 0.5 forces bus 2 to cover the rest
  s.network.branches[0].flow_limit = 0.5;
  const P1Result tight = solve_p1(s, {0.0});
  check_solution_quality(tight);
  CHECK(tight.report->buses[0].cap_plus == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(tight.report->cost == doctest::Approx(0.25 + 3 * 0.25).epsilon(1e-6));
  CHECK(tight.report->branches[0].loading == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("P3 at the baseline ratio of an unbudgeted single shed") {
  // one shed, net generation enough each step so zero flexibility balances
  net::Scenario s = fixtures::two_bus_line({1.0, 0.8}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.8});
  s.partition.sheds = {{"all", {1, 2}}};
  s.budget.cap_minus.row(1).setConstant(0.5);
  const double x0 = net::baseline_ratio(s, 0);
  CHECK(x0 == doctest::Approx(1.0));
  CHECK(qp::check_feasibility(build_p3(s, 0.0).program).feasible);
  CHECK(qp::check_feasibility(build_p3(s, x0).program).feasible);
  CHECK_FALSE(qp::check_feasibility(build_p3(s, x0 + 1e-3).program).feasible);
}

TEST_CASE("P3 above the closed-form frontier is infeasible") {
  // single bus, generous caps: both sides of the balance come from S+/S- at the same bus,
  // so the bus must be net zero: G + S+ = L + S-. Ratio is then exactly 1.
  net::Scenario s = fixtures::single_bus({0.2, 0.2}, {1.0, 1.0});
  s.budget.cap_plus.setConstant(0.8);
  s.budget.cap_minus.setConstant(0.3);
  CHECK(qp::check_feasibility(build_p3(s, 1.0).program).feasible);
  CHECK_FALSE(qp::check_feasibility(build_p3(s, 1.0 + 1e-3).program).feasible);
}

TEST_CASE("report of a zero-flexibility optimum") {
  net::Scenario s = fixtures::two_bus_line({1.5, 1.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 0.5});
  s.budget.cap_minus.setConstant(0.5);
  const P1Result r = solve_p1(s, uniform(s, 0.0));
  check_solution_quality(r);
  for (std::size_t k = 0; k < r.report->sheds.size(); ++k)
    CHECK(r.report->sheds[k].ratio == doctest::Approx(r.report->sheds[k].baseline).epsilon(1e-7));
  CHECK(r.report->cost <= 1e-12);
  qp::Solution bad = r.solution;
  bad.status = qp::SolveStatus::max_iter;
  CHECK_THROWS_AS(extract_report(s, r.p1, bad), SolverError);
}

TEST_CASE("f(tau) definition") {
  net::Scenario s = fixtures::two_bus_line({0.0, 0.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0});
  s.budget.cap_plus.setConstant(2.0);
  const auto r0 = solve_p1(s, uniform(s, 0.0));
  check_solution_quality(r0);
  const FTau f0 = evaluate_f_tau(s, 0.0, 2.0);
  CHECK(f0.feasible);
  CHECK(f0.f == doctest::Approx(-r0.report->cost / 2.0).epsilon(1e-9));
  const FTau big = evaluate_f_tau(s, 0.5, 1e12);
  CHECK(big.f == doctest::Approx(0.5).epsilon(1e-9));
  const FTau none = evaluate_f_tau(s, 5.0, 1.0);
  CHECK_FALSE(none.feasible);
  CHECK(is_neg_infinite(none.f));
  CHECK_THROWS_AS(evaluate_f_tau(s, 0.5, 0.0), ValidationError);
}

TEST_CASE("P1 matches an exhaustive grid minimizer on 3-bus, 2-step instances") {
  std::mt19937 rng(314);
  for (int trial = 0; trial < 4; ++trial) {
    const oracle::ThreeBus c = generators::random_three_bus(rng);
    const oracle::ThreeBusResult ref = oracle::three_bus_min_cost(c);
    net::Scenario s = fixtures::from_three_bus(c);
    const P1Result r = solve_p1(s, {c.x_min[0], c.x_min[1], c.x_min[2]});
    check_solution_quality(r);
    INFO("trial ", trial, " oracle ", ref.cost, " solver ", r.report->cost);
    CHECK(std::abs(r.report->cost - ref.cost) <= 5e-3);
    CHECK(r.report->cost <= ref.cost + 1e-6);
  }
}

TEST_CASE("bundled 39-bus scenario: structure and baseline") {
  const net::Scenario s = bundled("medium");
  const auto t0 = std::chrono::steady_clock::now();
  const P1Result base = solve_p1(s, uniform(s, 0.0));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("39-bus P1 solve: ", secs, " s, ", base.solution.iterations, " iterations, n = ", base.p1.program.n);
  check_solution_quality(base);
  CHECK(secs < 10.0);
  CHECK(base.report->cost > 0.0);
  for (const BusReport& b : base.report->buses) CHECK(b.cap_minus <= 1e-6);
  CHECK(base.report->cost == doctest::Approx(base.solution.objective).epsilon(1e-6));

  const P1Result one = solve_p1(s, uniform(s, 1.0));
  check_solution_quality(one);
  CHECK(one.report->min_ratio() >= 1.0 - 1e-6);
  CHECK(one.report->cost >= base.report->cost - 1e-9);

  const std::string csv = bus_table_csv(*one.report);
  CHECK(csv.rfind("bus,alpha,ratio,cap_plus_pu,cap_minus_pu,cap_plus_mw,cap_minus_mw\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);
  const auto j = nlohmann::json::parse(to_json(*one.report).dump());
  CHECK(j["sheds"].size() == 9);
  CHECK(j["buses"].size() == 39);
}

TEST_CASE("cost is monotone in tau and in partition refinement") {
  const net::Scenario low = bundled("low"), medium = bundled("medium"), high = bundled("high");
  double previous = 0.0;
  for (double tau : {0.0, 0.4, 0.8, 1.0}) {
    const P1Result r = solve_p1(medium, uniform(medium, tau));
    check_solution_quality(r);
    CHECK(r.report->cost >= previous - 1e-7 * (1 + previous));
    previous = r.report->cost;
  }
  for (double tau : {0.6, 1.0}) {
    const double c_low = solve_p1(low, uniform(low, tau)).report->cost;
    const double c_med = solve_p1(medium, uniform(medium, tau)).report->cost;
    const double c_high = solve_p1(high, uniform(high, tau)).report->cost;
    INFO("tau ", tau, ": ", c_low, " ", c_med, " ", c_high);
    CHECK(c_low >= c_med - 1e-7 * c_med);
    CHECK(c_med >= c_high - 1e-7 * c_high);
  }
}
