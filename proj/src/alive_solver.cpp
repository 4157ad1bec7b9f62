#include "healthshock/alive_solver.hpp"

#include <algorithm>
#include <iomanip>
#include <string>

#include "healthshock/quadrature.hpp"

namespace healthshock {

void AliveOde::operator()(double t, std::span<const double> cum_hazard, std::span<const double> y,
                          std::span<double> dy) const {
  const auto& p = params_;
  const double gamma = p.prefs.gamma;
  const double inv_gamma = 1.0 / gamma;
  const double r = p.market.r;
  const double commitment = p.habit.commitment_rate(r);
  const double sharpe = p.market.sharpe_term(gamma);
  const double B = dead_.B(t);
  const double g = dead_.g.value(t);
  const double discount = std::exp(-p.prefs.rho * t);
  const int n = p.n_states();

  for (int i = 0; i < n; ++i) {
    const std::size_t o = kWidth * static_cast<std::size_t>(i);
    const double lam = p.hazard.lambda(t, i);
    const double surv = std::exp(-cum_hazard[static_cast<std::size_t>(i)]);
    const double A = y[o];
    const double My = y[o + 1];
    const double MB = y[o + 2];
    const double G = y[o + 3];
    const double income = p.income.y0 * std::exp(p.income.delta * t) / p.income.xi[static_cast<std::size_t>(i)];

    dy[o] = (commitment + lam) * A + 1.0;
    dy[o + 1] = (r + lam) * My - income;
    dy[o + 2] = (r + lam) * MB - lam * B;

    double coupling = 0.0;
    for (const auto& tr : p.states.transitions) {
      if (tr.from != i) continue;
      const double Gj = y[kWidth * static_cast<std::size_t>(tr.to) + 3];
      coupling += tr.at(t) * (std::pow(Gj / G, gamma) - 1.0);
    }
    // f^{1/gamma} lambda^{1-1/gamma} = lambda * survival^{1/gamma}, finite at lambda = 0.
    dy[o + 3] = -inv_gamma * ((1.0 - gamma) * (r + lam + sharpe) + coupling) * G -
                std::pow(p.prefs.k_a[static_cast<std::size_t>(i)] * surv * discount, inv_gamma) *
                    std::pow(1.0 - p.habit.alpha * A, 1.0 - inv_gamma) -
                lam * std::pow(surv, inv_gamma) * g;
  }
}

namespace {

struct RawSolution {
  std::size_t steps = 0;
  std::vector<std::vector<double>> y;   // y[k] at node k (forward time order)
  std::vector<std::vector<double>> dy;  // slopes at node k
  std::vector<std::vector<double>> cum_hazard;  // per half-node, per state
};

RawSolution integrate_backward(const ModelParams& p, const DeadCoefficients& dead, std::size_t steps) {
  const int n = p.n_states();
  const auto un = static_cast<std::size_t>(n);
  const double T = p.horizon_T;
  const double dt = T / static_cast<double>(steps);
  const std::size_t width = AliveOde::kWidth * un;

  RawSolution sol;
  sol.steps = steps;
  // Cumulative hazards on the half-step lattice, accumulated forward so each
  // quadrature covers only dt/2.
  sol.cum_hazard.assign(2 * steps + 1, std::vector<double>(un, 0.0));
  for (std::size_t k = 1; k <= 2 * steps; ++k) {
    const double a = 0.5 * dt * static_cast<double>(k - 1);
    const double b = k == 2 * steps ? T : 0.5 * dt * static_cast<double>(k);
    for (int i = 0; i < n; ++i)
      sol.cum_hazard[k][static_cast<std::size_t>(i)] =
          sol.cum_hazard[k - 1][static_cast<std::size_t>(i)] +
          integrate([&](double u) { return p.hazard.lambda(u, i); }, a, b);
  }

  const AliveOde ode(p, dead);
  const double gamma = p.prefs.gamma;
  std::vector<double> y(width, 0.0);
  for (int i = 0; i < n; ++i) {
    const double surv_T = std::exp(-sol.cum_hazard.back()[static_cast<std::size_t>(i)]);
    y[AliveOde::kWidth * static_cast<std::size_t>(i) + 3] =
        std::pow(p.prefs.omega_a[static_cast<std::size_t>(i)] * surv_T * std::exp(-p.prefs.rho * T),
                 1.0 / gamma);
  }

  sol.y.assign(steps + 1, {});
  sol.dy.assign(steps + 1, {});
  std::vector<double> k1(width), k2(width), k3(width), k4(width), tmp(width);

  auto check_positive = [&](const std::vector<double>& v, double t) {
    for (int i = 0; i < n; ++i) {
      const double G = v[AliveOde::kWidth * static_cast<std::size_t>(i) + 3];
      if (!(G > 0.0) || !std::isfinite(G))
        throw Error(ErrorCode::GLossOfPositivity, "G_" + std::to_string(i) + "(" + std::to_string(t) +
                                                      ") = " + std::to_string(G));
    }
  };

  std::size_t k = steps;
  ode(T, sol.cum_hazard[2 * k], y, k1);
  sol.y[k] = y;
  sol.dy[k] = k1;
  while (k > 0) {
    const double t = k == steps ? T : dt * static_cast<double>(k);
    const double t_half = t - 0.5 * dt;
    const double t_next = dt * static_cast<double>(k - 1);
    const auto& lam_half = sol.cum_hazard[2 * k - 1];
    const auto& lam_next = sol.cum_hazard[2 * k - 2];

    for (std::size_t j = 0; j < width; ++j) tmp[j] = y[j] - 0.5 * dt * k1[j];
    check_positive(tmp, t_half);
    ode(t_half, lam_half, tmp, k2);
    for (std::size_t j = 0; j < width; ++j) tmp[j] = y[j] - 0.5 * dt * k2[j];
    check_positive(tmp, t_half);
    ode(t_half, lam_half, tmp, k3);
    for (std::size_t j = 0; j < width; ++j) tmp[j] = y[j] - dt * k3[j];
    check_positive(tmp, t_next);
    ode(t_next, lam_next, tmp, k4);
    for (std::size_t j = 0; j < width; ++j) y[j] -= dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    check_positive(y, t_next);

    --k;
    ode(t_next, lam_next, y, k1);
    sol.y[k] = y;
    sol.dy[k] = k1;
  }
  return sol;
}

UniformTable column(const RawSolution& sol, double T, std::size_t index) {
  std::vector<double> v(sol.steps + 1), d(sol.steps + 1);
  for (std::size_t k = 0; k <= sol.steps; ++k) {
    v[k] = sol.y[k][index];
    d[k] = sol.dy[k][index];
  }
  return UniformTable(0.0, T, std::move(v), std::move(d));
}

}  // namespace

AliveCoefficients solve_alive(const ModelParams& params, const DeadCoefficients& dead,
                              const AliveSolverOptions& options) {
  params.validate();
  if (std::abs(dead.horizon - params.horizon_T) > 1e-12 * params.horizon_T)
    throw Error(ErrorCode::GridMismatch, "dead coefficients solved on horizon " +
                                             std::to_string(dead.horizon) + ", expected " +
                                             std::to_string(params.horizon_T));
  if (options.steps < 2) throw Error(ErrorCode::InvalidParameter, "alive solver needs >= 2 steps");

  const RawSolution sol = integrate_backward(params, dead, options.steps);
  const double T = params.horizon_T;

  AliveCoefficients out;
  out.horizon = T;
  out.dead = dead;
  out.h_d_ref = options.h_d_ref;
  for (int i = 0; i < params.n_states(); ++i) {
    const std::size_t o = AliveOde::kWidth * static_cast<std::size_t>(i);
    StateCoefficients sc;
    sc.A = column(sol, T, o);
    sc.M_y = column(sol, T, o + 1);
    sc.M_B = column(sol, T, o + 2);
    sc.G = column(sol, T, o + 3);
    std::vector<double> v(options.steps + 1), d(options.steps + 1);
    for (std::size_t k = 0; k <= options.steps; ++k) {
      v[k] = sol.cum_hazard[2 * k][static_cast<std::size_t>(i)];
      d[k] = params.hazard.lambda(sc.G.node(k), i);
    }
    sc.cum_hazard = UniformTable(0.0, T, std::move(v), std::move(d));
    out.states.push_back(std::move(sc));
  }

  if (options.step_doubling_check) {
    const RawSolution fine = integrate_backward(params, dead, 2 * options.steps);
    double change = 0.0;
    for (int i = 0; i < params.n_states(); ++i) {
      const std::size_t o = AliveOde::kWidth * static_cast<std::size_t>(i) + 3;
      const double g_fine = fine.y.front()[o];
      change = std::max(change, std::abs(g_fine - sol.y.front()[o]) / std::abs(g_fine));
    }
    out.step_doubling_change = change;
  }
  return out;
}

double alive_effective_wealth(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                              std::optional<double> h_d) {
  const double hd = coeffs.resolve_habit_at_death(h, h_d);
  const double eff = x + coeffs.M(t, state, hd) + h * coeffs.at(state).A.value(t);
  if (eff > kWealthFloor) return eff;
  throw Error(ErrorCode::InsufficientWealth,
              std::string(eff >= -kWealthFloor ? "at" : "below") + " the alive boundary in state " +
                  std::to_string(state) + ": x + M + h A = " + std::to_string(eff));
}

double alive_value_tilde(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                         const ModelParams& params, std::optional<double> h_d) {
  check_state(params, state);
  const double eff = alive_effective_wealth(t, x, h, state, coeffs, h_d);
  const double gamma = params.prefs.gamma;
  return std::pow(coeffs.at(state).G.value(t), gamma) * std::pow(eff, 1.0 - gamma) / (1.0 - gamma);
}

double alive_value(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                   const ModelParams& params, std::optional<double> h_d) {
  return alive_value_tilde(t, x, h, state, coeffs, params, h_d) / coeffs.survival(t, state);
}

PolicyDecision alive_policy(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                            const ModelParams& params, std::optional<double> h_d) {
  check_state(params, state);
  const double hd = coeffs.resolve_habit_at_death(h, h_d);
  const double eff = alive_effective_wealth(t, x, h, state, coeffs, hd);
  const double gamma = params.prefs.gamma;
  const double inv_gamma = 1.0 / gamma;
  const auto& sc = coeffs.at(state);
  const double A = sc.A.value(t);
  const double G = sc.G.value(t);
  const double surv = coeffs.survival(t, state);
  const double lam = params.hazard.lambda(t, state);

  PolicyDecision d;
  d.pi = params.market.merton_fraction(gamma) * eff;
  d.c = h + eff / G * std::pow(1.0 - params.habit.alpha * A, -inv_gamma) *
                std::pow(params.prefs.k_a[static_cast<std::size_t>(state)] * surv *
                             std::exp(-params.prefs.rho * t),
                         inv_gamma);
  // lambda^{-1/gamma} f^{1/gamma} = survival^{1/gamma}
  d.p = lam * (hd * coeffs.dead.B(t) - x + eff / G * std::pow(surv, inv_gamma) * coeffs.dead.g.value(t));
  return d;
}

void write_alive_csv(std::ostream& out, const AliveCoefficients& coeffs) {
  out << "t,state,A,M_y,M_B,G\n" << std::setprecision(17);
  for (int i = 0; i < coeffs.n_states(); ++i) {
    const auto& sc = coeffs.at(i);
    for (std::size_t k = 0; k < sc.G.size(); ++k)
      out << sc.G.node(k) << ',' << i << ',' << sc.A.values()[k] << ',' << sc.M_y.values()[k] << ','
          << sc.M_B.values()[k] << ',' << sc.G.values()[k] << '\n';
  }
}

}  // namespace healthshock
