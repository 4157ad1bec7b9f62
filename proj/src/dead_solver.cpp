#include "healthshock/dead_solver.hpp"

#include <iomanip>
#include <string>
#include <vector>

#include "healthshock/quadrature.hpp"

namespace healthshock {

namespace {

// (k_d e^{-rho t})^{1/gamma} (1 + alpha B)^{1 - 1/gamma}
double consumption_source(double t, double B, const ModelParams& p) {
  const double inv_gamma = 1.0 / p.prefs.gamma;
  return std::pow(p.prefs.k_d * std::exp(-p.prefs.rho * t), inv_gamma) *
         std::pow(1.0 + p.habit.alpha * B, 1.0 - inv_gamma);
}

}  // namespace

DeadCoefficients solve_dead(const ModelParams& params, const DeadSolverOptions& options) {
  params.validate();
  if (options.nodes < 3) throw Error(ErrorCode::InvalidParameter, "dead solver needs >= 3 nodes");

  DeadCoefficients out;
  const double T = params.horizon_T;
  const double gamma = params.prefs.gamma;
  out.horizon = T;
  out.rate = params.habit.commitment_rate(params.market.r);
  if (std::abs(out.rate) <= 1e-12)
    throw Error(ErrorCode::DegenerateHabit, "r + beta - alpha = 0 makes B(t) singular");
  out.N = (1.0 - gamma) / gamma * (params.market.r + params.market.sharpe_term(gamma));

  const double terminal = std::pow(params.prefs.omega_d * std::exp(-params.prefs.rho * T), 1.0 / gamma);
  std::vector<double> values(options.nodes);
  std::vector<double> slopes(options.nodes);
  const double step = T / static_cast<double>(options.nodes - 1);
  for (std::size_t k = 0; k < options.nodes; ++k) {
    const double t = k + 1 == options.nodes ? T : step * static_cast<double>(k);
    const double integral = integrate(
        [&](double s) { return std::exp(out.N * (s - t)) * consumption_source(s, out.B(s), params); }, t, T);
    values[k] = integral + std::exp(out.N * (T - t)) * terminal;
    slopes[k] = -out.N * values[k] - consumption_source(t, out.B(t), params);
  }
  out.g = UniformTable(0.0, T, std::move(values), std::move(slopes));
  return out;
}

double dead_g_rhs(double t, double g, const DeadCoefficients& coeffs, const ModelParams& params) {
  return -coeffs.N * g - consumption_source(t, coeffs.B(t), params);
}

double dead_effective_wealth(double t, double x, double h, const DeadCoefficients& coeffs) {
  const double eff = x - h * coeffs.B(t);
  if (eff > kWealthFloor) return eff;
  throw Error(ErrorCode::InsufficientWealth,
              std::string(eff >= -kWealthFloor ? "at" : "below") +
                  " the post-death habit boundary: x - h B(t) = " + std::to_string(eff));
}

double dead_value(double t, double x, double h, const DeadCoefficients& coeffs, const ModelParams& params) {
  const double eff = dead_effective_wealth(t, x, h, coeffs);
  const double gamma = params.prefs.gamma;
  return std::pow(coeffs.g.value(t), gamma) * std::pow(eff, 1.0 - gamma) / (1.0 - gamma);
}

PolicyDecision dead_policy(double t, double x, double h, const DeadCoefficients& coeffs,
                           const ModelParams& params) {
  const double eff = dead_effective_wealth(t, x, h, coeffs);
  const double gamma = params.prefs.gamma;
  const double B = coeffs.B(t);
  PolicyDecision d;
  d.pi = params.market.merton_fraction(gamma) * eff;
  d.c = h + eff / coeffs.g.value(t) * std::pow(1.0 + params.habit.alpha * B, -1.0 / gamma) *
                std::pow(params.prefs.k_d * std::exp(-params.prefs.rho * t), 1.0 / gamma);
  return d;
}

void write_dead_csv(std::ostream& out, const DeadCoefficients& coeffs) {
  out << "t,B,g\n" << std::setprecision(17);
  for (std::size_t k = 0; k < coeffs.g.size(); ++k) {
    const double t = coeffs.g.node(k);
    out << t << ',' << coeffs.B(t) << ',' << coeffs.g.values()[k] << '\n';
  }
}

}  // namespace healthshock
