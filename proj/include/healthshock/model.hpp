#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "healthshock/errors.hpp"

namespace healthshock {

struct MarketParams {
  double r = 0.0;      // risk-free rate
  double mu = 0.0;     // risky drift
  double sigma = 0.0;  // risky volatility

  /// Optimal risky share of effective wealth, (mu - r) / (sigma^2 gamma).
  double merton_fraction(double gamma) const { return (mu - r) / (sigma * sigma * gamma); }
  /// (mu - r)^2 / (2 sigma^2 gamma)
  double sharpe_term(double gamma) const {
    return (mu - r) * (mu - r) / (2.0 * sigma * sigma * gamma);
  }
};

struct PreferenceParams {
  double gamma = 0.0;            // relative risk aversion, != 1
  double rho = 0.0;              // utility discount rate
  std::vector<double> k_a;       // alive consumption weight per health state
  std::vector<double> omega_a;   // alive terminal weight per health state
  double k_d = 0.0;              // post-death consumption weight
  double omega_d = 0.0;          // post-death terminal weight
};

struct HabitParams {
  double alpha = 0.0;  // accumulation intensity
  double beta = 0.0;   // forgetting rate
  double h0 = 0.0;

  /// r + beta - alpha; the discount rate of the habit commitment.
  double commitment_rate(double r) const { return r + beta - alpha; }
};

/// lambda(t) = (1/n) exp((m + t - l) / n) with m the hazard's base age.
struct GompertzLaw {
  double n = 0.0;
  double l = 0.0;
};

/// Additive excess mortality k1 + k2 (m + t); zero for the healthy state.
struct ExcessMortality {
  double k1 = 0.0;
  double k2 = 0.0;
};

struct HazardModel {
  double base_age = 0.0;
  std::optional<GompertzLaw> gompertz;
  std::vector<ExcessMortality> excess;  // one entry per health state
  double theta_loading = 0.0;           // theta = (1 + loading) lambda

  double lambda(double t, int state) const {
    const ExcessMortality& e = excess[static_cast<std::size_t>(state)];
    double rate = e.k1 + e.k2 * (base_age + t);
    if (gompertz) rate += std::exp((base_age + t - gompertz->l) / gompertz->n) / gompertz->n;
    return rate;
  }
  double theta(double t, int state) const { return (1.0 + theta_loading) * lambda(t, state); }
};

/// q_ij(t) = scale * exp(growth * t).
struct TransitionIntensity {
  int from = 0;
  int to = 0;
  double scale = 0.0;
  double growth = 0.0;

  double at(double t) const { return scale * std::exp(growth * t); }
};

struct HealthStateSpace {
  int n_states = 1;
  std::vector<TransitionIntensity> transitions;

  double intensity(double t, int from, int to) const;
  /// Total exit intensity sum_{j != i} q_ij(t).
  double exit_rate(double t, int from) const;
};

struct IncomeModel {
  double y0 = 0.0;
  double delta = 0.0;
  std::vector<double> xi;  // xi[0] == 1, xi[k] > 1 otherwise
};

struct ModelParams {
  MarketParams market;
  PreferenceParams prefs;
  HabitParams habit;
  HealthStateSpace states;
  HazardModel hazard;
  IncomeModel income;
  double horizon_T = 0.0;
  double x0 = 0.0;
  int eta0 = 0;

  int n_states() const { return states.n_states; }
  /// Throws Error(InvalidParameter | DegenerateHabit) on the first violated invariant.
  void validate() const;
};

/// The calibrated household of the critical-illness example (two states).
ModelParams paper_defaults();

// --- primitives -----------------------------------------------------------

/// Integral of lambda(u, state) over [t0, t1] by adaptive Gauss-Kronrod.
double cumulative_hazard(const ModelParams& p, double t0, double t1, int state);
/// exp(-int_0^t lambda(u, state) du) with the state frozen.
double survival(const ModelParams& p, double t, int state);
/// lambda(t, state) * survival(t, state).
double density(const ModelParams& p, double t, int state);
double income_rate(const ModelParams& p, double t, int state);

/// Exact solution of dh = (alpha c - beta h) dt over dt with c held constant.
double habit_step(double h, double c, double dt, const HabitParams& habit);

double utility_alive(double t, double c, double h, int state, const PreferenceParams& prefs);
double utility_dead(double t, double c, double h, const PreferenceParams& prefs);
/// Terminal utility Psi; pass std::nullopt for the post-death household.
double terminal_utility(double t, double x, std::optional<int> state,
                        const PreferenceParams& prefs);

void check_state(const ModelParams& p, int state);
void check_time(const ModelParams& p, double t);

/// x^e with a multiply-only path when e is a small integer (the usual gamma).
class PowerLaw {
 public:
  explicit PowerLaw(double exponent);
  double operator()(double x) const {
    if (!integral_) return std::pow(x, exponent_);
    double result = 1.0;
    double base = x;
    for (unsigned n = magnitude_; n != 0; n >>= 1) {
      if (n & 1U) result *= base;
      base *= base;
    }
    return negative_ ? 1.0 / result : result;
  }
  double exponent() const { return exponent_; }

 private:
  double exponent_;
  bool integral_ = false;
  bool negative_ = false;
  unsigned magnitude_ = 0;
};

/// Controls (pi, c, p) in currency and currency/year; p is empty after death.
struct PolicyDecision {
  double pi = 0.0;
  double c = 0.0;
  std::optional<double> p;
  // Effective wealth at the decision state, when the rule computes it anyway.
  double effective_wealth = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace healthshock
