#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "healthshock/alive_solver.hpp"
#include "healthshock/model.hpp"

namespace healthshock {

/// Feedback rule used by the simulator. A decision of std::nullopt means the
/// state lies outside the rule's admissible region.
struct PolicyOracle {
  std::function<std::optional<PolicyDecision>(double t, double x, double h, int state)> decide_alive;
  std::function<std::optional<PolicyDecision>(double t, double x, double h)> decide_dead;
  /// Optional diagnostic: effective wealth, std::nullopt state meaning post-death.
  std::function<double(double t, double x, double h, std::optional<int> state)> effective_wealth;
};

/// The closed-form optimal controls. When `grid_dt` > 0 the per-time
/// coefficients are precomputed on the grid k * grid_dt so that decisions on
/// that grid are table lookups; other times fall back to interpolation.
PolicyOracle optimal_policy(const ModelParams& params, std::shared_ptr<const AliveCoefficients> coeffs,
                            double grid_dt = 0.0);

/// Multipliers applied on top of a base rule: pi scaled by `merton`, the
/// consumption excess c - h by `consumption`, the premium by `premium`.
struct Perturbation {
  double merton = 1.0;
  double consumption = 1.0;
  double premium = 1.0;

  bool identity() const { return merton == 1.0 && consumption == 1.0 && premium == 1.0; }
  std::string label() const;
};

/// Parses NAME:FACTOR with NAME in {merton, consumption, premium}.
Perturbation parse_perturbation(const std::string& spec);

PolicyOracle perturbed(PolicyOracle base, const Perturbation& perturbation);

}  // namespace healthshock
