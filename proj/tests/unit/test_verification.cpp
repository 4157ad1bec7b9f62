#include <doctest.h>

#include <memory>
#include <sstream>

#include "healthshock/alive_solver.hpp"
#include "healthshock/policy.hpp"
#include "healthshock/verification.hpp"

using namespace healthshock;

namespace {

const ModelParams& defaults() {
  static const ModelParams p = paper_defaults();
  return p;
}

const AliveCoefficients& solved() {
  static const AliveCoefficients c = solve_alive(defaults(), solve_dead(defaults()));
  return c;
}

AliveCoefficients corrupted(const std::string& name, double eps) {
  AliveCoefficients c = solved();
  corrupt(c, name, eps);
  return c;
}

ModelParams homogeneous() {
  ModelParams p = paper_defaults();
  p.hazard.excess = {{0.0, 0.0}, {0.0, 0.0}};
  p.income.y0 = 0.0;
  p.states.transitions = {{0, 1, 0.01, 0.05}};
  // Without habit the habit at death is known, so the closed form is exact.
  p.habit.alpha = 0.0;
  p.habit.h0 = 0.0;
  return p;
}

}  // namespace

TEST_CASE("dead HJB residual on the standard grid") {
  const ResidualReport r = check_dead_hjb(solved().dead, defaults());
  CHECK(r.n_points == 50 * 20 * 10);
  CHECK(r.max_rel_residual <= 1e-6);
  CHECK(r.passed());
}

TEST_CASE("g corruption breaches the dead HJB threshold") {
  const ResidualReport r = check_dead_hjb(corrupted("g", 1e-3).dead, defaults());
  CHECK(r.max_rel_residual > 1e-4);
  CHECK_FALSE(r.passed());
  CHECK(r.worst_k.size() == 10);
}

TEST_CASE("alive HJB with the common-wealth coupling holds in both states") {
  const auto reports = check_alive_hjb(solved(), defaults(), {}, CouplingMode::Ansatz);
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) CHECK(r.max_rel_residual <= 1e-5);
}

TEST_CASE("exact coupling: the absorbing state passes, the healthy state does not") {
  // The closed form evaluates the coupling term at the healthy state's own
  // effective wealth. With the calibrated income gap the sick state's human
  // capital is much lower, so the exact bracket does not vanish in state 0.
  const auto reports = check_alive_hjb(solved(), defaults(), {}, CouplingMode::Exact);
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].max_rel_residual <= 1e-5);
  CHECK(reports[0].max_rel_residual > 1e-2);
}

TEST_CASE("G corruption breaches the alive HJB threshold") {
  const auto r0 = check_alive_hjb(corrupted("G0", 1e-3), defaults(), {}, CouplingMode::Ansatz);
  CHECK_FALSE(r0[0].passed());
  const auto r1 = check_alive_hjb(corrupted("G1", 1e-3), defaults(), {}, CouplingMode::Exact);
  CHECK_FALSE(r1[1].passed());
}

TEST_CASE("first-order conditions") {
  const ResidualReport r = check_focs(solved(), defaults());
  CHECK(r.max_rel_residual <= 1e-5);
}

TEST_CASE("coefficient ODE consistency and corruption") {
  CHECK(check_coefficient_odes(solved(), defaults()).max_rel_residual <= 1e-6);
  for (const char* name : {"A1", "M0", "G"}) CHECK_FALSE(check_coefficient_odes(corrupted(name, 1e-3), defaults()).passed());
}

TEST_CASE("boundary conditions") {
  CHECK(check_boundary(solved(), defaults()).max_rel_residual <= 1e-12);
  CHECK_FALSE(check_boundary(corrupted("G1", 1e-6), defaults()).passed());
}

TEST_CASE("checks replay identically") {
  const ResidualReport a = check_focs(solved(), defaults(), GridSpec{5, 5, 3});
  const ResidualReport b = check_focs(solved(), defaults(), GridSpec{5, 5, 3});
  CHECK(a.max_rel_residual == b.max_rel_residual);
  CHECK(a.max_abs_residual == b.max_abs_residual);
  std::ostringstream sa, sb;
  write_reports_csv(sa, {a});
  write_reports_csv(sb, {b});
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("check,rank,t,x,h,state,abs_residual,rel_residual,threshold,passed\n", 0) == 0);
}

TEST_CASE("grid points sit strictly inside the admissible region") {
  for (int i : {0, 1}) {
    const auto grid = make_grid(GridSpec{}, defaults(), solved(), i);
    CHECK(grid.size() == 10000);
    for (const auto& g : grid) CHECK(alive_effective_wealth(g.t, g.x, g.h, i, solved(), g.h) > 0.0);
  }
}

TEST_CASE("grid and corruption parsing") {
  const GridSpec g = parse_grid("8x4x2");
  CHECK(g.n_t == 8);
  CHECK(g.n_x == 4);
  CHECK(g.n_h == 2);
  CHECK_THROWS_AS(parse_grid("8x4"), Error);
  CHECK_THROWS_AS(parse_grid("axbxc"), Error);
  CHECK_THROWS_AS(parse_grid("0x4x2").validate(), Error);
  CHECK(parse_coupling("ansatz") == CouplingMode::Ansatz);
  CHECK_THROWS_AS(parse_coupling("loose"), Error);
  AliveCoefficients c = solved();
  CHECK_THROWS_AS(apply_corruption(c, "g", 2), Error);
  CHECK_THROWS_AS(apply_corruption(c, "G7:1e-3", 2), Error);
  CHECK_THROWS_AS(apply_corruption(c, "Q:1e-3", 2), Error);
  apply_corruption(c, "G1:1e-3", 2);
  CHECK(c.at(1).G.value(0.0) == doctest::Approx(1.001 * solved().at(1).G.value(0.0)).epsilon(1e-14));
}

TEST_CASE("standard perturbations") {
  const auto v = standard_perturbations();
  REQUIRE(v.size() == 6);
  CHECK(v[0].merton == 0.5);
  CHECK(v[1].merton == 1.5);
  CHECK(v[2].consumption == 0.9);
  CHECK(v[3].consumption == 1.1);
  CHECK(v[4].premium == 0.0);
  CHECK(v[5].premium == 2.0);
  CHECK(parse_perturbation("merton:1.5").merton == 1.5);
  CHECK_THROWS_AS(parse_perturbation("leverage:2"), Error);
}

TEST_CASE("dominance holds where the closed form is exact") {
  const ModelParams p = homogeneous();
  auto coeffs = std::make_shared<AliveCoefficients>(solve_alive(p, solve_dead(p)));
  SimConfig cfg;
  cfg.n_paths = 2000;
  cfg.dt = 0.02;
  const MCValueReport r = check_mc_value(p, coeffs, cfg, true);
  CHECK(r.within_3se);
  CHECK(r.estimate.inadmissible == 0);
  REQUIRE(r.dominance.size() == 6);
  for (const auto& d : r.dominance) {
    CAPTURE(d.perturbation.label());
    CHECK(d.passed);
    CHECK(d.difference < 0.0);
  }
}
