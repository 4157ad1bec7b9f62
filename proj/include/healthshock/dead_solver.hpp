#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>

#include "healthshock/model.hpp"
#include "healthshock/table.hpp"

namespace healthshock {

struct DeadSolverOptions {
  std::size_t nodes = 4001;
};

/// Solution of the dependent's problem after the breadwinner's death:
///   V_d(t, x, h) = g(t)^gamma (x - h B(t))^(1-gamma) / (1 - gamma).
/// B is closed form; g is tabulated (quadrature per node, ODE slopes).
struct DeadCoefficients {
  double horizon = 0.0;
  double rate = 0.0;  // r + beta - alpha
  double N = 0.0;     // (1-gamma)/gamma [r + (mu-r)^2 / (2 sigma^2 gamma)]
  UniformTable g;

  double B(double t) const { return -std::expm1(-rate * (horizon - t)) / rate; }
  double B_prime(double t) const { return -std::exp(-rate * (horizon - t)); }
  double grid_dt() const { return g.step(); }
};

DeadCoefficients solve_dead(const ModelParams& params, const DeadSolverOptions& options = {});

/// Right-hand side of the backward ODE satisfied by g.
double dead_g_rhs(double t, double g, const DeadCoefficients& coeffs, const ModelParams& params);

/// x - h B(t); throws InsufficientWealth unless it exceeds the 1e-12 floor.
double dead_effective_wealth(double t, double x, double h, const DeadCoefficients& coeffs);
double dead_value(double t, double x, double h, const DeadCoefficients& coeffs,
                  const ModelParams& params);
PolicyDecision dead_policy(double t, double x, double h, const DeadCoefficients& coeffs,
                           const ModelParams& params);

/// Columns t,B,g on the solver grid.
void write_dead_csv(std::ostream& out, const DeadCoefficients& coeffs);

inline constexpr double kWealthFloor = 1e-12;

}  // namespace healthshock
