#include <doctest.h>

#include <memory>
#include <sstream>

#include "healthshock/alive_solver.hpp"
#include "healthshock/policy.hpp"
#include "healthshock/simulation.hpp"
#include "oracles.hpp"

using namespace healthshock;

namespace {

// A fixed rule: constant risky amount, consumption and premium.
PolicyOracle constant_rule(double pi, double c, double p) {
  PolicyOracle rule;
  rule.decide_alive = [=](double, double, double, int) { return std::optional<PolicyDecision>({pi, c, p}); };
  rule.decide_dead = [=](double, double, double) { return std::optional<PolicyDecision>({pi, c, std::nullopt}); };
  return rule;
}

ModelParams toy() {
  ModelParams p = oracle::single_state();
  p.habit.h0 = 0.0;
  return p;
}

SimConfig config(std::size_t paths, double dt) {
  SimConfig cfg;
  cfg.n_paths = paths;
  cfg.dt = dt;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("zero policy reproduces the annuity drawdown") {
  const ModelParams p = toy();
  const double c = 1000.0;
  const PathBundle b = simulate(p, constant_rule(0.0, c, 0.0), config(1, 1e-4));
  const double growth = std::exp(0.02 * 40.0);
  const double expected = 35000.0 * growth - c * (growth - 1.0) / 0.02;
  CHECK(oracle::rel(b.paths[0].terminal_wealth, expected) < 1e-10);
}

TEST_CASE("consuming exactly the income compounds initial wealth") {
  ModelParams p = toy();
  p.income.y0 = 1000.0;
  p.income.delta = 0.0;
  const PathBundle b = simulate(p, constant_rule(0.0, 1000.0, 0.0), config(1, 1e-3));
  CHECK(oracle::rel(b.paths[0].terminal_wealth, 35000.0 * std::exp(0.8)) < 1e-10);
}

TEST_CASE("deterministic path matches the utility integral") {
  const ModelParams p = toy();
  const double c = 1000.0;
  const double a = 0.1;
  const double beta = 0.174;
  const PathBundle b = simulate(p, constant_rule(0.0, c, 0.0), config(2, 1e-3));
  auto h = [&](double t) { return c * a / beta * (1.0 - std::exp(-beta * t)); };
  const double running =
      oracle::simpson([&](double t) { return 0.5 * std::exp(-0.1 * t) * std::pow(c - h(t), -5.0) / -5.0; }, 0.0, 40.0,
                      40000);
  const double growth = std::exp(0.8);
  const double XT = 35000.0 * growth - c * (growth - 1.0) / 0.02;
  const double terminal = 3.0 * std::exp(-4.0) * std::pow(XT, -5.0) / -5.0;
  CHECK(oracle::rel(b.paths[0].running, running) < 1e-8);
  CHECK(oracle::rel(b.paths[0].utility, running + terminal) < 1e-8);
  const MCEstimate e = estimate_objective(b);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("death pays the premium over the hazard") {
  ModelParams p = toy();
  p.hazard.excess = {{50.0, 0.0}};
  SimConfig cfg = config(1, 1e-3);
  cfg.record_paths = 1;
  cfg.record_stride = 1;
  const double prem = 300.0;
  const double c = 1000.0;
  const PathBundle b = simulate(p, constant_rule(0.0, c, prem), cfg);
  REQUIRE(b.paths[0].death_time);
  const auto& tr = b.trajectories.at(0);
  std::size_t j = 1;
  while (tr[j].eta != -1) ++j;
  CHECK(tr[j].t == doctest::Approx(*b.paths[0].death_time));
  const double dt = 1e-3;
  const double before = tr[j - 1].x * std::exp(0.02 * dt) - (c + prem) * std::expm1(0.02 * dt) / 0.02;
  CHECK(tr[j].x - before == doctest::Approx(prem / 50.0).epsilon(1e-9));
  CHECK(b.paths[0].final_state == -1);
}

TEST_CASE("same seed gives identical paths regardless of thread count") {
  ModelParams p = toy();
  p.hazard.excess = {{0.02, 0.0}};
  SimConfig a = config(64, 0.01);
  a.threads = 1;
  SimConfig b = a;
  b.threads = 4;
  const auto ra = simulate(p, constant_rule(5000.0, 1000.0, 100.0), a);
  const auto rb = simulate(p, constant_rule(5000.0, 1000.0, 100.0), b);
  for (std::size_t k = 0; k < ra.paths.size(); ++k) {
    CHECK(ra.paths[k].utility == rb.paths[k].utility);
    CHECK(ra.paths[k].death_time == rb.paths[k].death_time);
  }
  // A path's stream does not depend on how many paths are run.
  SimConfig c = a;
  c.n_paths = 8;
  const auto rc = simulate(p, constant_rule(5000.0, 1000.0, 100.0), c);
  CHECK(rc.paths[5].utility == ra.paths[5].utility);
  SimConfig d = a;
  d.seed = 8;
  CHECK(simulate(p, constant_rule(5000.0, 1000.0, 100.0), d).paths[0].utility != ra.paths[0].utility);
}

TEST_CASE("antithetic pairing at least halves the variance on a volatility-only model") {
  const ModelParams p = toy();
  SimConfig plain = config(2000, 0.05);
  SimConfig anti = plain;
  anti.antithetic = true;
  const auto rule = constant_rule(20000.0, 1000.0, 0.0);
  const MCEstimate e_plain = estimate_objective(simulate(p, rule, plain));
  const MCEstimate e_anti = estimate_objective(simulate(p, rule, anti));
  CHECK(e_anti.n_effective == 1000);
  CHECK(e_anti.std_error * e_anti.std_error <= 0.5 * e_plain.std_error * e_plain.std_error);
}

TEST_CASE("inadmissible decisions end the path with the penalty") {
  const ModelParams p = toy();
  SimConfig cfg = config(2, 0.01);
  cfg.inadmissible_penalty = -1.0;
  PolicyOracle rule = constant_rule(0.0, 1000.0, 0.0);
  rule.decide_alive = [](double t, double, double, int) -> std::optional<PolicyDecision> {
    if (t > 1.0) return std::nullopt;
    return PolicyDecision{0.0, 1000.0, 0.0};
  };
  const PathBundle b = simulate(p, rule, cfg);
  CHECK(b.inadmissible == 2);
  CHECK(b.paths[0].inadmissible);
  CHECK(b.paths[0].utility == doctest::Approx(b.paths[0].running - 1.0));
}

TEST_CASE("configuration errors") {
  ModelParams p = toy();
  const auto rule = constant_rule(0.0, 1000.0, 0.0);
  auto code_of = [&](const ModelParams& q, const SimConfig& cfg) {
    try {
      simulate(q, rule, cfg);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::UsageError;  // unreachable in these cases
  };
  p.hazard.excess = {{200.0, 0.0}};
  CHECK(code_of(p, config(2, 1e-3)) == ErrorCode::StepTooCoarse);
  SimConfig odd = config(3, 0.01);
  odd.antithetic = true;
  CHECK_THROWS_AS(simulate(toy(), rule, odd), Error);
  CHECK_THROWS_AS(simulate(toy(), rule, config(2, 0.3)), Error);
  CHECK_THROWS_AS(simulate(toy(), rule, config(0, 0.01)), Error);
}

TEST_CASE("estimates need two samples") {
  PathBundle b;
  b.paths.resize(1);
  CHECK_THROWS_AS(estimate_objective(b), Error);
  b.paths.resize(3);
  b.paths[0].utility = 1.0;
  b.paths[1].utility = 2.0;
  b.paths[2].utility = 3.0;
  const MCEstimate e = estimate_objective(b);
  CHECK(e.mean == doctest::Approx(2.0));
  CHECK(e.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1001);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.1 * static_cast<double>(k);
  CHECK(pairwise_sum(v) == doctest::Approx(0.1 * 1000.0 * 1001.0 / 2.0).epsilon(1e-14));
  CHECK(pairwise_sum({}) == 0.0);
}

TEST_CASE("optimal policy on a homogeneous model agrees with the closed-form value") {
  // Equal hazards, no income and no habit keep the closed form exact and the
  // policy admissible: effective wealth is common to both states and the
  // habit at death is known (zero).
  ModelParams p = paper_defaults();
  p.hazard.excess = {{0.0, 0.0}, {0.0, 0.0}};
  p.income.y0 = 0.0;
  p.states.transitions = {{0, 1, 0.01, 0.05}};
  p.habit.alpha = 0.0;
  p.habit.h0 = 0.0;
  auto coeffs = std::make_shared<AliveCoefficients>(solve_alive(p, solve_dead(p)));
  SimConfig cfg = config(4000, 0.01);
  const PathBundle b = simulate(p, optimal_policy(p, coeffs, cfg.dt), cfg);
  const MCEstimate e = estimate_objective(b);
  const double V = alive_value(0.0, p.x0, p.habit.h0, 0, *coeffs, p);
  CHECK(b.inadmissible == 0);
  CHECK(std::abs(e.mean - V) < 3.0 * e.std_error);
}

TEST_CASE("paths CSV") {
  SimConfig cfg = config(2, 0.5);
  cfg.record_paths = 1;
  cfg.record_stride = 10;
  const PathBundle b = simulate(toy(), constant_rule(0.0, 1000.0, 0.0), cfg);
  std::ostringstream out;
  write_paths_csv(out, b);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "path,t,X,h,eta,pi,c,p");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 9);  // steps 0, 10, ..., 80
}
