#include <doctest.h>

#include "eshed/analytic.hpp"
#include "eshed/error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace eshed;
using namespace eshed::analytic;

namespace {

CommunitySeries series(std::vector<double> gen, std::vector<double> load, std::vector<double> cap) {
  return {std::move(gen), std::move(load), std::move(cap), std::nullopt};
}

} // namespace

TEST_CASE("unconstrained export examples") {
  CHECK(max_ratio_unconstrained(series({0.2, 0.3}, {1, 1}, {0, 0})) == doctest::Approx(0.25));
  CHECK(max_ratio_unconstrained(series({0, 0}, {1, 1}, {0.5, 0.5})) == doctest::Approx(0.5));
  CHECK(max_ratio_unconstrained(series({0.2, 0.2}, {1, 1}, {0.8, 0.8})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(max_ratio_unconstrained(series({0, 0}, {0, 0}, {1, 1})), ValidationError);
}

TEST_CASE("constrained export examples") {
  CommunitySeries loose = series({0.2, 0.1}, {1, 1}, {0.6, 0.5});
  loose.export_limit = std::vector<double>{0.9, 1.0};
  CHECK(max_ratio_constrained(loose) == doctest::Approx(max_ratio_unconstrained(series({0.2, 0.1}, {1, 1}, {0.6, 0.5}))));

  CommunitySeries binding = series({0.2, 0.2}, {1, 1}, {1.2, 1.2});
  binding.export_limit = std::vector<double>{0.8, 0.8};
  CHECK(max_ratio_constrained(binding) == doctest::Approx(1.0));

  CommunitySeries microgrid = series({0.2, 0.5}, {1, 1}, {0.8, 0.5});
  microgrid.export_limit = std::vector<double>{0.8, 0.5};
  CHECK(max_ratio_constrained(microgrid) == doctest::Approx(1.0));

  CommunitySeries starved = series({0.2, 0.2}, {1, 1}, {1.2, 1.2});
  starved.export_limit = std::vector<double>{0.5, 0.5};
  CHECK_THROWS_WITH_AS(max_ratio_constrained(starved), doctest::Contains("sub-unity export regime"), ValidationError);
}

TEST_CASE("limits just above the deficit can push the ratio past 1") {
  // S+ stopped at the limit beats running at cap and absorbing the excess
  CommunitySeries c = series({0.2, 0.2}, {1, 1}, {1.2, 1.2});
  c.export_limit = std::vector<double>{0.9, 0.9};
  const double r = max_ratio_constrained(c);
  CHECK(r == doctest::Approx(1.1));
  oracle::CommunityBox box{c.gen, c.load, c.cap_plus, {1.0, 1.0}, *c.export_limit};
  CHECK(std::abs(oracle::brute_force_max_ratio(box, 1000) - r) < 2e-3);
}

TEST_CASE("capacity curves") {
  const CommunitySeries c = series({0.2, 0.4}, {1, 2}, {0, 0});
  const double x0 = 0.6 / 3.0;
  for (CurveMode mode : {CurveMode::unconstrained, CurveMode::zero_export}) {
    const auto pts = capacity_curve(c, {0.0}, mode);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].budget == 0.0);
    CHECK(pts[0].max_ratio == doctest::Approx(x0));
  }
  CommunitySeries limited = c;
  limited.export_limit = std::vector<double>{1.0, 2.0};
  CHECK(capacity_curve(limited, {0.0}, CurveMode::limits)[0].max_ratio == doctest::Approx(x0));
  CHECK_THROWS_AS(capacity_curve(c, {0.0}, CurveMode::limits), ValidationError);
  CHECK_THROWS_AS(capacity_curve(c, {1.0, 0.5}, CurveMode::unconstrained), ValidationError);

  const auto line = capacity_curve(c, {0.0, 0.5, 1.0, 2.0, 4.0}, CurveMode::unconstrained);
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double slope = (line[i].max_ratio - line[i - 1].max_ratio) / (line[i].budget - line[i - 1].budget);
    CHECK(slope == doctest::Approx(1.0 / 3.0));
  }

  // gen proportional to load, so the load-shaped budget fills the deficit exactly
  const double deficit = 3.0 - 0.6;
  const auto zero = capacity_curve(c, {deficit}, CurveMode::zero_export);
  CHECK(zero[0].max_ratio == doctest::Approx(1.0));
  CHECK(zero[0].budget_normalized == doctest::Approx(deficit / 3.0));

  // zero-export curve never exceeds the unconstrained one
  const std::vector<double> grid{0.0, 0.3, 0.9, 1.5, 2.4, 3.0};
  const auto a = capacity_curve(c, grid, CurveMode::unconstrained);
  const auto b = capacity_curve(c, grid, CurveMode::zero_export);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(b[i].max_ratio <= a[i].max_ratio + 1e-12);
}

TEST_CASE("required budget inverts the unconstrained proposition") {
  CHECK(required_budget(0.2, 0.2, 2.0) == 0.0);
  CHECK(required_budget(1.0, 0.2, 2.0) == doctest::Approx(1.6));
  CHECK(required_budget(1.0, 0.2, 4.0) == doctest::Approx(2 * required_budget(1.0, 0.2, 2.0)));
  CHECK_THROWS_AS(required_budget(0.1, 0.2, 2.0), ValidationError);
  CHECK_THROWS_AS(required_budget(0.5, 0.2, 0.0), ValidationError);
}

TEST_CASE("proposition properties on random series") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto unc = generators::random_community(rng, false).series;
    const auto lim = generators::random_community(rng, true).series;

    // affine in a uniform scaling of cap_plus
    CommunitySeries scaled = unc;
    double shape = 0;
    for (double& v : scaled.cap_plus) {
      shape += v;
      v *= 2.5;
    }
    CHECK(max_ratio_unconstrained(scaled) - max_ratio_unconstrained(unc) == doctest::Approx(1.5 * shape / unc.gamma()));

    // dominance, with equality iff the limits never bind
    CommunitySeries dropped = lim;
    dropped.export_limit.reset();
    const double rc = max_ratio_constrained(lim);
    const double ru = max_ratio_unconstrained(dropped);
    CHECK(rc <= ru + 1e-12);
    bool slack_everywhere = true;
    for (std::size_t t = 0; t < lim.load.size(); ++t) slack_everywhere &= (*lim.export_limit)[t] >= lim.cap_plus[t];
    if (slack_everywhere)
      CHECK(rc == doctest::Approx(ru));
    else
      CHECK(rc < ru - 1e-12);

    // enlarging a limit never hurts
    CommunitySeries wider = lim;
    const std::size_t t = rng() % lim.load.size();
    (*wider.export_limit)[t] += 0.3;
    CHECK(max_ratio_constrained(wider) >= rc - 1e-12);
  }
}

TEST_CASE("propositions match brute-force search") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const bool limits = trial % 2 == 1;
    const auto c = generators::random_community(rng, limits);
    const double closed = limits ? max_ratio_constrained(c.series) : max_ratio_unconstrained(c.series);
    const double brute = oracle::brute_force_max_ratio(c.box, 1000);
    INFO("trial ", trial);
    CHECK(std::abs(closed - brute) <= 2e-3);
  }
}
