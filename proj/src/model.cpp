#include "healthshock/model.hpp"

#include <limits>
#include <string>

#include "healthshock/quadrature.hpp"

namespace healthshock {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidParameter, what);
}

}  // namespace

double HealthStateSpace::intensity(double t, int from, int to) const {
  double q = 0.0;
  for (const auto& tr : transitions)
    if (tr.from == from && tr.to == to) q += tr.at(t);
  return q;
}

double HealthStateSpace::exit_rate(double t, int from) const {
  double q = 0.0;
  for (const auto& tr : transitions)
    if (tr.from == from && tr.to != from) q += tr.at(t);
  return q;
}

void ModelParams::validate() const {
  const int n = states.n_states;
  const auto un = static_cast<std::size_t>(n);
  require(horizon_T > 0.0, "horizon_T must be positive");
  require(n >= 1, "at least one health state is required");
  require(eta0 >= 0 && eta0 < n, "eta0 must name a valid health state");

  require(market.sigma > 0.0, "market.sigma must be positive");
  require(market.mu > market.r, "market.mu must exceed market.r");

  require(prefs.gamma > 0.0 && prefs.gamma != 1.0, "prefs.gamma must be positive and != 1");
  require(prefs.k_a.size() == un, "prefs.k_a needs one weight per health state");
  require(prefs.omega_a.size() == un, "prefs.omega_a needs one weight per health state");
  for (std::size_t i = 0; i < un; ++i) {
    require(prefs.k_a[i] > 0.0, "prefs.k_a weights must be positive");
    require(prefs.omega_a[i] > 0.0, "prefs.omega_a weights must be positive");
  }
  require(prefs.k_d > 0.0 && prefs.omega_d > 0.0, "post-death weights must be positive");

  require(habit.alpha >= 0.0 && habit.beta >= 0.0 && habit.h0 >= 0.0,
          "habit.alpha, habit.beta and habit.h0 must be nonnegative");
  if (std::abs(habit.commitment_rate(market.r)) <= 1e-12)
    throw Error(ErrorCode::DegenerateHabit, "r + beta - alpha must be nonzero");

  require(income.y0 >= 0.0, "income.y0 must be nonnegative");
  require(income.xi.size() == un, "income.xi needs one factor per health state");
  require(income.xi[0] == 1.0, "income.xi[0] must be 1 (healthy wage)");
  for (std::size_t k = 1; k < un; ++k)
    require(income.xi[k] > 1.0 && std::isfinite(income.xi[k]),
            "income.xi[k] must lie in (1, inf) for unhealthy states");

  require(hazard.excess.size() == un, "hazard.excess needs one entry per health state");
  if (hazard.gompertz) require(hazard.gompertz->n > 0.0, "hazard.gompertz.n must be positive");
  require(hazard.theta_loading >= 0.0, "hazard.theta_loading must be nonnegative");
  // The hazard is affine-plus-exponential in t, so checking a fine grid is enough
  // to catch a negative excess slope.
  for (int i = 0; i < n; ++i)
    for (int k = 0; k <= 400; ++k) {
      const double t = horizon_T * k / 400.0;
      const double lam = hazard.lambda(t, i);
      require(std::isfinite(lam) && lam >= 0.0, "hazard rate must be finite and nonnegative on [0,T]");
    }

  require(states.n_states == n, "state count mismatch");
  for (const auto& tr : states.transitions) {
    require(tr.from >= 0 && tr.from < n && tr.to >= 0 && tr.to < n && tr.from != tr.to,
            "transition must connect two distinct valid states");
    require(tr.scale >= 0.0 && std::isfinite(tr.growth), "transition intensity must be nonnegative");
  }
}

ModelParams paper_defaults() {
  ModelParams p;
  p.market = {0.02, 0.07, 0.2};
  p.prefs.gamma = 6.0;
  p.prefs.rho = 0.1;
  p.prefs.k_a = {1.0, 0.5};
  p.prefs.omega_a = {2.5, 3.0};
  p.prefs.k_d = 0.5;
  p.prefs.omega_d = 3.0;
  p.habit = {0.1, 0.174, 6.0};
  p.states.n_states = 2;
  p.states.transitions = {{0, 1, 0.0001492, 0.07353}};
  p.hazard.base_age = 20.0;
  p.hazard.gompertz = GompertzLaw{12.14982, 92.29736};
  p.hazard.excess = {{0.0, 0.0}, {0.032, 0.0043}};
  p.hazard.theta_loading = 0.0;
  p.income = {25000.0, 0.075, {1.0, 1.25}};
  p.horizon_T = 40.0;
  p.x0 = 35000.0;
  p.eta0 = 0;
  return p;
}

void check_state(const ModelParams& p, int state) {
  if (state < 0 || state >= p.n_states())
    throw Error(ErrorCode::InvalidState, "state " + std::to_string(state) + " outside 0.." +
                                             std::to_string(p.n_states() - 1));
}

void check_time(const ModelParams& p, double t) {
  const double slack = 1e-12 * p.horizon_T;
  if (!(t >= -slack && t <= p.horizon_T + slack))
    throw Error(ErrorCode::TimeOutOfRange,
                "t=" + std::to_string(t) + " outside [0," + std::to_string(p.horizon_T) + "]");
}

double cumulative_hazard(const ModelParams& p, double t0, double t1, int state) {
  check_state(p, state);
  return integrate([&](double u) { return p.hazard.lambda(u, state); }, t0, t1);
}

double survival(const ModelParams& p, double t, int state) {
  check_state(p, state);
  check_time(p, t);
  return std::exp(-cumulative_hazard(p, 0.0, t, state));
}

double density(const ModelParams& p, double t, int state) {
  return p.hazard.lambda(t, state) * survival(p, t, state);
}

double income_rate(const ModelParams& p, double t, int state) {
  check_state(p, state);
  check_time(p, t);
  return p.income.y0 * std::exp(p.income.delta * t) / p.income.xi[static_cast<std::size_t>(state)];
}

double habit_step(double h, double c, double dt, const HabitParams& habit) {
  if (habit.beta == 0.0) return h + habit.alpha * c * dt;
  const double target = c * habit.alpha / habit.beta;
  return target + (h - target) * std::exp(-habit.beta * dt);
}

namespace {

double crra(double base, double gamma) { return std::pow(base, 1.0 - gamma) / (1.0 - gamma); }

void check_habit(double c, double h) {
  if (!(c > h))
    throw Error(ErrorCode::HabitViolation,
                "consumption " + std::to_string(c) + " does not exceed habit " + std::to_string(h));
}

}  // namespace

double utility_alive(double t, double c, double h, int state, const PreferenceParams& prefs) {
  check_habit(c, h);
  return prefs.k_a.at(static_cast<std::size_t>(state)) * std::exp(-prefs.rho * t) *
         crra(c - h, prefs.gamma);
}

double utility_dead(double t, double c, double h, const PreferenceParams& prefs) {
  check_habit(c, h);
  return prefs.k_d * std::exp(-prefs.rho * t) * crra(c - h, prefs.gamma);
}

double terminal_utility(double t, double x, std::optional<int> state, const PreferenceParams& prefs) {
  if (!(x > 0.0))
    throw Error(ErrorCode::NonpositiveWealth, "terminal wealth " + std::to_string(x) + " <= 0");
  const double weight = state ? prefs.omega_a.at(static_cast<std::size_t>(*state)) : prefs.omega_d;
  return weight * std::exp(-prefs.rho * t) * crra(x, prefs.gamma);
}

PowerLaw::PowerLaw(double exponent) : exponent_(exponent) {
  const double rounded = std::round(exponent);
  if (rounded == exponent && std::abs(rounded) <= 64.0) {
    integral_ = true;
    negative_ = rounded < 0.0;
    magnitude_ = static_cast<unsigned>(std::abs(rounded));
  }
}

}  // namespace healthshock
