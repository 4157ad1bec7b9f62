#include <doctest.h>

#include <sstream>

#include "healthshock/alive_solver.hpp"
#include "healthshock/verification.hpp"
#include "oracles.hpp"

using namespace healthshock;

namespace {

const ModelParams& defaults() {
  static const ModelParams p = paper_defaults();
  return p;
}

const AliveCoefficients& alive() {
  static const AliveCoefficients c = solve_alive(defaults(), solve_dead(defaults()));
  return c;
}

constexpr double kGamma = 6.0;
constexpr double kCommitment = 0.02 + 0.174 - 0.1;
const double kSharpe = 0.05 * 0.05 / (2.0 * 0.04 * kGamma);

// Discount factor exp(-int_t^s (rate + lambda)) with the closed-form survival.
double discount(double rate, double t, double s, int state) {
  return std::exp(-rate * (s - t)) * oracle::survival(defaults(), s, state) / oracle::survival(defaults(), t, state);
}

double A_oracle(double t, int i) {
  return -oracle::simpson([&](double s) { return discount(kCommitment, t, s, i); }, t, 40.0);
}

double My_oracle(double t, int i) {
  const double xi = defaults().income.xi[static_cast<std::size_t>(i)];
  return oracle::simpson([&](double s) { return 25000.0 * std::exp(0.075 * s) / xi * discount(0.02, t, s, i); },
                         t, 40.0);
}

double MB_oracle(double t, int i) {
  return oracle::simpson(
      [&](double s) {
        const double B = (1.0 - std::exp(-kCommitment * (40.0 - s))) / kCommitment;
        return defaults().hazard.lambda(s, i) * B * discount(0.02, t, s, i);
      },
      t, 40.0);
}

// The sick state has no exits, so its G equation is linear:
//   G' = a G + b,  a = -(1-gamma)(r + lambda + sharpe)/gamma,
//   b = -(k F e^{-rho t})^{1/gamma} (1 - alpha A)^{1-1/gamma} - lambda F^{1/gamma} g.
double G1_oracle(double t, const AliveCoefficients& c) {
  const ModelParams& p = defaults();
  auto int_a = [&](double from, double to) {
    const double H = -std::log(oracle::survival(p, to, 1) / oracle::survival(p, from, 1));
    return -(1.0 - kGamma) / kGamma * ((0.02 + kSharpe) * (to - from) + H);
  };
  auto b = [&](double s) {
    const double F = oracle::survival(p, s, 1);
    return -std::pow(0.5 * F * std::exp(-0.1 * s), 1.0 / kGamma) *
               std::pow(1.0 - 0.1 * c.at(1).A.value(s), 1.0 - 1.0 / kGamma) -
           p.hazard.lambda(s, 1) * std::pow(F, 1.0 / kGamma) * c.dead.g.value(s);
  };
  const double GT = std::pow(3.0 * oracle::survival(p, 40.0, 1) * std::exp(-4.0), 1.0 / kGamma);
  return GT * std::exp(-int_a(t, 40.0)) - oracle::simpson([&](double s) { return b(s) * std::exp(-int_a(t, s)); }, t, 40.0);
}

}  // namespace

TEST_CASE("terminal conditions") {
  for (int i : {0, 1}) {
    const auto& s = alive().at(i);
    CHECK(s.A.value(40.0) == 0.0);
    CHECK(s.M_y.value(40.0) == 0.0);
    CHECK(s.M_B.value(40.0) == 0.0);
    const double GT = std::pow(defaults().prefs.omega_a[static_cast<std::size_t>(i)] * survival(defaults(), 40.0, i) *
                                   std::exp(-0.1 * 40.0),
                               1.0 / kGamma);
    CHECK(oracle::rel(s.G.value(40.0), GT) < 1e-12);
  }
}

TEST_CASE("linear coefficients agree with their discounted integrals") {
  for (int i : {0, 1})
    for (double t : {0.0, 15.0, 35.0}) {
      CHECK(oracle::rel(alive().at(i).A.value(t), A_oracle(t, i)) < 1e-9);
      CHECK(oracle::rel(alive().at(i).M_y.value(t), My_oracle(t, i)) < 1e-9);
      CHECK(oracle::rel(alive().at(i).M_B.value(t), MB_oracle(t, i)) < 1e-9);
    }
}

TEST_CASE("pinned coefficient values at t = 0") {
  CHECK(alive().at(0).G.value(0.0) == doctest::Approx(35.027).epsilon(1e-4));
  CHECK(alive().at(1).G.value(0.0) == doctest::Approx(29.0607).epsilon(1e-4));
  CHECK(alive().at(0).A.value(0.0) == doctest::Approx(-10.335).epsilon(1e-4));
  CHECK(alive().at(1).A.value(0.0) == doctest::Approx(-4.351).epsilon(1e-3));
}

TEST_CASE("sick-state G matches the quadrature of its decoupled linear ODE") {
  for (double t : {0.0, 10.0, 30.0}) CHECK(oracle::rel(alive().at(1).G.value(t), G1_oracle(t, alive())) < 1e-6);
}

TEST_CASE("A is nonpositive so the consumption multiplier never exceeds one") {
  for (int i : {0, 1})
    for (std::size_t k = 0; k < alive().at(i).A.size(); k += 97) CHECK(1.0 - 0.1 * alive().at(i).A.values()[k] >= 1.0);
}

TEST_CASE("RK4 step doubling is below 1e-8") {
  CHECK(alive().step_doubling_change < 1e-8);
}

TEST_CASE("single state without hazard or income reduces to the habit annuity") {
  ModelParams p = oracle::single_state();
  AliveSolverOptions o;
  o.h_d_ref = 0.0;
  const AliveCoefficients c = solve_alive(p, solve_dead(p), o);
  for (double t : {0.0, 13.0, 39.0}) {
    CHECK(c.M(t, 0, 0.0) == 0.0);
    CHECK(c.at(0).A.value(t) == doctest::Approx(-c.dead.B(t)).epsilon(1e-12));
  }
}

TEST_CASE("vanishing hazard recovers the post-death problem") {
  ModelParams p = oracle::single_state();
  p.hazard.excess = {{1e-8, 0.0}};
  const AliveCoefficients c = solve_alive(p, solve_dead(p));
  for (double t : {0.0, 20.0})
    for (double x : {5000.0, 50000.0}) {
      const double va = alive_value(t, x, 100.0, 0, c, p);
      const double vd = dead_value(t, x, 100.0, c.dead, p);
      CHECK(oracle::rel(va, vd) < 1e-3);
    }
}

TEST_CASE("value identities") {
  const ModelParams& p = defaults();
  const auto& c = alive();
  for (int i : {0, 1}) {
    const double t = 12.0;
    const double h = 500.0;
    const double x = 40000.0;
    const double V = alive_value(t, x, h, i, c, p);
    CHECK(alive_value_tilde(t, x, h, i, c, p) / V == doctest::Approx(survival(p, t, i)).epsilon(1e-12));
    // Doubling effective wealth scales V by 2^{1-gamma}.
    const double X = alive_effective_wealth(t, x, h, i, c);
    CHECK(alive_value(t, x + X, h, i, c, p) == doctest::Approx(std::pow(2.0, -5.0) * V).epsilon(1e-12));
    CHECK(alive_value(40.0, x, h, i, c, p) == doctest::Approx(terminal_utility(40.0, x, i, p.prefs)).epsilon(1e-12));
  }
}

TEST_CASE("policy structure") {
  const ModelParams& p = defaults();
  const auto& c = alive();
  for (int i : {0, 1})
    for (double t : {0.0, 9.0, 27.0, 39.5})
      for (double x : {1e4, 1e5, 1e6})
        for (double h : {0.0, 2000.0}) {
          const double X = alive_effective_wealth(t, x, h, i, c);
          const PolicyDecision d = alive_policy(t, x, h, i, c, p);
          CHECK(d.pi / X == doctest::Approx(0.2083333).epsilon(1e-7));
          CHECK(d.c > h);
          REQUIRE(d.p);
          // Wealth left at death, net of the dependent's habit commitment.
          const double lam = p.hazard.lambda(t, i);
          const double estate = x + *d.p / lam - h * c.dead.B(t);
          const double expected = X * std::pow(survival(p, t, i), 1.0 / kGamma) * c.dead.g.value(t) / c.at(i).G.value(t);
          CHECK(estate > 0.0);
          CHECK(estate == doctest::Approx(expected).epsilon(1e-9));
        }
}

TEST_CASE("explicit habit at death enters through M_B") {
  const auto& c = alive();
  const double base = alive_effective_wealth(5.0, 1e5, 100.0, 0, c, 0.0);
  const double shifted = alive_effective_wealth(5.0, 1e5, 100.0, 0, c, 1000.0);
  CHECK(base - shifted == doctest::Approx(1000.0 * c.at(0).M_B.value(5.0)).epsilon(1e-10));
}

TEST_CASE("wealth below the alive floor is rejected") {
  const auto& c = alive();
  const double floor = -c.M(0.0, 0, 6.0) - 6.0 * c.at(0).A.value(0.0);
  CHECK_THROWS_AS(alive_value(0.0, floor - 1.0, 6.0, 0, c, defaults()), Error);
  CHECK_THROWS_AS(alive_policy(0.0, floor - 1e-3, 6.0, 0, c, defaults()), Error);
}

TEST_CASE("homogeneous states make the common-wealth coupling exact") {
  // Same hazard in both states and no income: the effective wealth is the
  // same in either state, so the closed form solves the HJB exactly.
  ModelParams p = defaults();
  p.hazard.excess = {{0.0, 0.0}, {0.0, 0.0}};
  p.income.y0 = 0.0;
  p.states.transitions = {{0, 1, 0.01, 0.05}};
  const AliveCoefficients c = solve_alive(p, solve_dead(p));
  const auto reports = check_alive_hjb(c, p, GridSpec{10, 8, 4}, CouplingMode::Exact);
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) CHECK(r.passed());
}

TEST_CASE("coefficient CSV has one row per node and state") {
  std::ostringstream out;
  write_alive_csv(out, alive());
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,state,A,M_y,M_B,G");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 2 * alive().at(0).G.size());
}
