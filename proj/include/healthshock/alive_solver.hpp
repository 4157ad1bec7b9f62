#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "healthshock/dead_solver.hpp"
#include "healthshock/model.hpp"
#include "healthshock/table.hpp"

namespace healthshock {

struct AliveSolverOptions {
  std::size_t steps = 4000;
  /// Re-solve with half the step and record the change in G_i(0).
  bool step_doubling_check = true;
  /// Habit level assumed at death. Empty means "the habit at evaluation time".
  std::optional<double> h_d_ref;
};

/// Coefficients of one health state. M = M_y - h_d M_B splits the human-capital
/// term so that any habit-at-death can be applied without re-solving.
struct StateCoefficients {
  UniformTable A;
  UniformTable M_y;
  UniformTable M_B;
  UniformTable G;
  UniformTable cum_hazard;  // int_0^t lambda(u, i) du, slope lambda
};

struct AliveCoefficients {
  double horizon = 0.0;
  std::vector<StateCoefficients> states;
  DeadCoefficients dead;
  std::optional<double> h_d_ref;
  /// max_i |G_i(0; dt/2) - G_i(0; dt)| / G_i(0; dt/2), NaN when not run.
  double step_doubling_change = std::nan("");

  int n_states() const { return static_cast<int>(states.size()); }
  double grid_dt() const { return states.front().G.step(); }
  const StateCoefficients& at(int state) const { return states[static_cast<std::size_t>(state)]; }
  double survival(double t, int state) const { return std::exp(-at(state).cum_hazard.value(t)); }
  double M(double t, int state, double h_d) const {
    return at(state).M_y.value(t) - h_d * at(state).M_B.value(t);
  }
  double resolve_habit_at_death(double h, std::optional<double> h_d) const {
    return h_d ? *h_d : h_d_ref.value_or(h);
  }
};

/// Backward coefficient system. Per state i the unknowns are laid out as
/// [A_i, M_y_i, M_B_i, G_i]; the G_i are coupled through the transition
/// intensities, A and M are linear and state-local.
class AliveOde {
 public:
  AliveOde(const ModelParams& params, const DeadCoefficients& dead) : params_(params), dead_(dead) {}

  static constexpr std::size_t kWidth = 4;

  void operator()(double t, std::span<const double> cum_hazard, std::span<const double> y,
                  std::span<double> dy) const;

 private:
  const ModelParams& params_;
  const DeadCoefficients& dead_;
};

AliveCoefficients solve_alive(const ModelParams& params, const DeadCoefficients& dead,
                              const AliveSolverOptions& options = {});

/// x + M_i(t) + h A_i(t); throws InsufficientWealth unless above the 1e-12 floor.
double alive_effective_wealth(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                              std::optional<double> h_d = std::nullopt);
/// V~ = survival * V, the value in the survival-weighted problem.
double alive_value_tilde(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                         const ModelParams& params, std::optional<double> h_d = std::nullopt);
double alive_value(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                   const ModelParams& params, std::optional<double> h_d = std::nullopt);
PolicyDecision alive_policy(double t, double x, double h, int state, const AliveCoefficients& coeffs,
                            const ModelParams& params, std::optional<double> h_d = std::nullopt);

/// Columns t,state,A,M_y,M_B,G on the solver grid.
void write_alive_csv(std::ostream& out, const AliveCoefficients& coeffs);

}  // namespace healthshock
