#include <doctest.h>

#include "eshed/error.hpp"
#include "eshed/netmodel.hpp"
#include "fixtures.hpp"

using namespace eshed;
using namespace eshed::net;

namespace {

const char* kTwoBus = R"(function mpc = tiny
mpc.baseMVA = 100;
mpc.bus = [
  1 3 50 0 0 0 1 1 0 345 1 1.1 0.9;
  2 1  0 0 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.branch = [
  1 2 0 0.1 0 100 100 100 0 0 1 -360 360;
];
)";

} // namespace

TEST_CASE("minimal 2-bus case maps fields directly") {
  const Network net = parse_matpower_case(kTwoBus);
  REQUIRE(net.num_buses() == 2);
  REQUIRE(net.num_branches() == 1);
  CHECK(net.base_mva == 100.0);
  CHECK(net.reference_bus == 1);
  CHECK(net.buses[0].has_load);
  CHECK_FALSE(net.buses[1].has_load);
  CHECK(net.branches[0].reactance == 0.1);
  CHECK(net.branches[0].flow_limit == 1.0);
  CHECK(net.connected());
}

TEST_CASE("bundled case39 parses to a connected 39-bus network") {
  std::vector<std::string> warnings;
  const Network net = parse_matpower_case(read_text_file(fixtures::data_path("case39.m")), &warnings);
  CHECK(net.num_buses() == 39);
  CHECK(net.num_branches() == 46);
  CHECK(net.connected());
  CHECK(net.reference_bus == 31);
  CHECK(net.base_mva == 100.0);
  // version, gen and gencost are skipped with a note each
  CHECK(warnings.size() == 3);
  int loads = 0;
  for (const Bus& b : net.buses) loads += b.has_load;
  CHECK(loads == 21);
}

TEST_CASE("parser rejects invalid input with locations") {
  std::string zero_x = kTwoBus;
  zero_x.replace(zero_x.find("0.1 0 100"), 3, "0.0");
  CHECK_THROWS_WITH_AS(parse_matpower_case(zero_x), doctest::Contains("nonpositive reactance"), ParseError);

  std::string dup = kTwoBus;
  dup.replace(dup.find("\n  2 1"), 6, "\n  1 1");
  CHECK_THROWS_WITH_AS(parse_matpower_case(dup), doctest::Contains("duplicate bus id"), ParseError);

  std::string unknown = kTwoBus;
  unknown.replace(unknown.find("  1 2 0 0.1"), 11, "  1 7 0 0.1");
  CHECK_THROWS_WITH_AS(parse_matpower_case(unknown), doctest::Contains("unknown bus"), ParseError);

  std::string junk = kTwoBus;
  junk.replace(junk.find("345 1 1.1 0.9;\n  2"), 3, "3x5");
  try {
    parse_matpower_case(junk);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 22);
  }

  CHECK_THROWS_AS(parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1 3 0;\n"), ParseError);
  CHECK_THROWS_AS(parse_matpower_case("mpc.baseMVA = 100;\n"), ParseError);
}

TEST_CASE("rateA of zero means unlimited") {
  std::string text = kTwoBus;
  text.replace(text.find("0.1 0 100"), 9, "0.1 0 0  ");
  const Network net = parse_matpower_case(text);
  CHECK(std::isinf(net.branches[0].flow_limit));
}

TEST_CASE("serialization round-trips and is idempotent") {
  for (const std::string& text : {std::string(kTwoBus), read_text_file(fixtures::data_path("case39.m"))}) {
    const Network a = parse_matpower_case(text);
    const std::string once = serialize_matpower_case(a);
    const Network b = parse_matpower_case(once);
    CHECK(a == b);
    CHECK(serialize_matpower_case(b) == once);
  }
}

TEST_CASE("induced subgraph connectivity") {
  // path 1 - 2 - 3
  Network net;
  net.buses = {{1, true}, {2, false}, {3, true}};
  net.branches = {{1, 2, 0.1, 1.0, 100.0}, {2, 3, 0.1, 1.0, 100.0}};
  net.reference_bus = 1;
  CHECK(induced_subgraph_connected(net, {2}));
  CHECK_FALSE(induced_subgraph_connected(net, {1, 3}));
  CHECK(induced_subgraph_connected(net, {1, 2}));
  CHECK(induced_subgraph_connected(net, {1, 2, 3}));
  CHECK_THROWS_AS(induced_subgraph_connected(net, {4}), ValidationError);
}

TEST_CASE("profiles CSV") {
  const Network net = parse_matpower_case(read_text_file(fixtures::data_path("case39.m")));
  const TimeGrid grid{24, 1.0};
  std::string header = "bus,kind";
  std::string row = "3,load";
  for (int t = 1; t <= 24; ++t) {
    header += ",t" + std::to_string(t);
    row += t == 5 ? ",2.5" : ",1.0";
  }
  const Profiles p = parse_profiles(header + "\n" + row + "\n", net, grid);
  const int i = net.index_of(3);
  CHECK(p.load(i, 0) == 1.0);
  CHECK(p.load(i, 4) == 2.5);
  CHECK(p.load.sum() == doctest::Approx(25.5));
  CHECK(p.gen.sum() == 0.0);

  const Profiles empty = parse_profiles(header + "\n", net, grid);
  CHECK(empty.load.isZero());
  CHECK(empty.gen.isZero());
  CHECK(empty.load.rows() == 39);

  std::string negative = row;
  negative.replace(negative.find(",2.5"), 4, ",-0.1");
  CHECK_THROWS_WITH_AS(parse_profiles(header + "\n" + negative, net, grid), doctest::Contains("negative profile value"),
                       ParseError);
  CHECK_THROWS_AS(parse_profiles(header + "\n" + "99" + row.substr(1), net, grid), ParseError);
  CHECK_THROWS_AS(parse_profiles(header + "\n3,load,1.0", net, grid), ParseError);
  CHECK_THROWS_AS(parse_profiles(header + "\n3,storage" + row.substr(6), net, grid), ParseError);
}

TEST_CASE("bundled scenarios validate cleanly") {
  for (const char* name : {"scenario_39_low.json", "scenario_39_medium.json", "scenario_39_high.json"}) {
    const ScenarioFile f = load_scenario(fixtures::data_path(name));
    const ValidationReport report = validate_scenario(f.scenario);
    INFO(report.to_json().dump());
    CHECK(report.ok());
    CHECK(f.scenario.grid.steps == 24);
    CHECK(f.scenario.network.reference_bus == 1);
    CHECK(f.inputs.size() == 3);
  }
  CHECK(load_scenario(fixtures::data_path("scenario_39_low.json")).scenario.num_sheds() == 21);
  CHECK(load_scenario(fixtures::data_path("scenario_39_medium.json")).scenario.num_sheds() == 9);
  CHECK(load_scenario(fixtures::data_path("scenario_39_high.json")).scenario.num_sheds() == 3);
}

TEST_CASE("baseline ratio and total demand") {
  Scenario s = fixtures::single_bus({0.2, 0.2}, {1.0, 1.0});
  CHECK(baseline_ratio(s, 0) == doctest::Approx(0.2));
  CHECK(total_demand(s, 0) == doctest::Approx(2.0));

  s.profiles.gen.setZero();
  CHECK(baseline_ratio(s, 0) == 0.0);
  s.profiles.gen = s.profiles.load;
  CHECK(baseline_ratio(s, 0) == 1.0);

  s.profiles.load.setZero();
  CHECK(total_demand(s, 0) == 0.0);
  CHECK_THROWS_AS(baseline_ratio(s, 0), ValidationError);

  Scenario two = fixtures::two_bus_line({0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0});
  two.partition.sheds = {{"both", {1, 2}}};
  CHECK(total_demand(two, 0) == doctest::Approx(4.0));
}

TEST_CASE("baseline ratio is scale invariant and demand is additive") {
  const ScenarioFile f = load_scenario(fixtures::data_path("scenario_39_medium.json"));
  Scenario s = f.scenario;
  for (int k = 0; k < s.num_sheds(); ++k) {
    const double x0 = baseline_ratio(s, k);
    Scenario scaled = s;
    for (int i : s.shed_indices(k)) {
      scaled.profiles.gen.row(i) *= 3.7;
      scaled.profiles.load.row(i) *= 3.7;
    }
    CHECK(baseline_ratio(scaled, k) == doctest::Approx(x0).epsilon(1e-12));
  }
  double parts = 0.0;
  for (int k = 0; k < s.num_sheds(); ++k) parts += total_demand(s, k);
  Scenario merged = s;
  merged.partition.sheds = {{"all", {}}};
  for (const Shed& shed : s.partition.sheds)
    merged.partition.sheds[0].buses.insert(merged.partition.sheds[0].buses.end(), shed.buses.begin(), shed.buses.end());
  CHECK(total_demand(merged, 0) == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("each injected violation yields exactly its own report class") {
  const Scenario good = load_scenario(fixtures::data_path("scenario_39_medium.json")).scenario;
  REQUIRE(validate_scenario(good).ok());

  auto expect_only = [&](Scenario s, ViolationKind kind) {
    const ValidationReport r = validate_scenario(s);
    INFO(to_string(kind), " -> ", r.to_json().dump());
    CHECK(r.kinds() == std::set<ViolationKind>{kind});
  };
  const int i39 = good.network.index_of(39);
  const int i5 = good.network.index_of(5);
  {
    Scenario s = good;
    s.partition.sheds[0].buses.push_back(5); // 5 already sits in G25
    expect_only(s, ViolationKind::sheds_not_disjoint);
  }
  {
    Scenario s = good;
    // 38 hangs off 29 only, so {26, 27, 38} falls apart
    s.partition.sheds[5].buses = {26, 27, 38};
    s.partition.sheds[6].buses = {29, 28};
    expect_only(s, ViolationKind::shed_not_connected);
  }
  {
    Scenario s = good;
    for (int id : s.partition.sheds[5].buses) s.profiles.load.row(s.network.index_of(id)).setZero();
    expect_only(s, ViolationKind::zero_demand_shed);
  }
  {
    Scenario s = good;
    s.partition.sheds.pop_back();
    // R10 held load buses 21, 23 and 24
    const ValidationReport r = validate_scenario(s);
    CHECK(r.kinds() == std::set<ViolationKind>{ViolationKind::uncovered_load_bus});
    CHECK(r.violations.size() == 3);
  }
  {
    Scenario s = good;
    s.budget.cap_plus(i5, 3) = 0.2;
    expect_only(s, ViolationKind::flex_at_non_load_bus);
  }
  {
    Scenario s = good;
    s.budget.cap_minus(i39, 3) = -0.2;
    expect_only(s, ViolationKind::negative_budget);
  }
  {
    Scenario s = good;
    s.weights.beta[i39] = -1.0;
    expect_only(s, ViolationKind::negative_weight);
  }
  {
    Scenario s = good;
    s.profiles.gen(i39, 0) = -0.5;
    expect_only(s, ViolationKind::negative_profile);
  }
  {
    Scenario s = good;
    s.profiles.load(i5, 0) = 0.5;
    expect_only(s, ViolationKind::load_flag_mismatch);
  }
  {
    Scenario s = good;
    s.weights.alpha.conservativeResize(10);
    expect_only(s, ViolationKind::dimension_mismatch);
  }
  {
    Scenario s = good;
    s.network.reference_bus = 99;
    expect_only(s, ViolationKind::missing_reference_bus);
  }
  {
    Scenario s = good;
    s.network.branches[0].reactance = 0.0;
    expect_only(s, ViolationKind::invalid_branch);
  }
  {
    Scenario s = good;
    s.partition.sheds.push_back({"ghost", {77}});
    expect_only(s, ViolationKind::unknown_shed_bus);
  }
  {
    Scenario s = good;
    s.partition.sheds.push_back({"void", {}});
    expect_only(s, ViolationKind::empty_shed);
  }
  {
    Scenario s = good;
    s.grid.step_hours = 0.0;
    expect_only(s, ViolationKind::invalid_time_grid);
  }
  {
    Scenario s = good;
    ExportLimits lim{Matrix::Constant(39, 24, 1.0), Matrix::Constant(39, 24, -1.0)};
    lim.lower(i39, 2) = 2.0;
    s.budget.export_limits = lim;
    expect_only(s, ViolationKind::invalid_export_limits);
  }
  {
    Scenario s = good;
    // bus 30 hangs off bus 2 only
    std::vector<Branch> kept;
    for (const Branch& br : s.network.branches)
      if (br.from != 30 && br.to != 30) kept.push_back(br);
    s.network.branches = kept;
    s.partition.sheds[3].buses = {1, 2, 25, 37};
    expect_only(s, ViolationKind::network_disconnected);
  }
}
