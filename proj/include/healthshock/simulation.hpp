#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "healthshock/model.hpp"
#include "healthshock/policy.hpp"

namespace healthshock {

struct SimConfig {
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 20240501;
  bool antithetic = false;
  /// Added to the accrued utility of a path that leaves the admissible
  /// region. Defaults to 1e3 * Psi_d(0, x0).
  std::optional<double> inadmissible_penalty;
  std::size_t record_paths = 0;   // trajectories kept for the first N paths
  std::size_t record_stride = 1;  // keep every k-th step of those paths
  unsigned threads = 0;           // 0: hardware concurrency
};

struct PathRecord {
  double utility = 0.0;   // running + terminal (or running + penalty)
  double running = 0.0;
  double terminal = 0.0;
  std::optional<double> death_time;
  int final_state = 0;    // -1 after death
  int transitions = 0;
  double terminal_wealth = 0.0;
  double min_effective_wealth = 0.0;  // NaN when the policy exposes none
  bool inadmissible = false;
};

struct TrajectoryPoint {
  double t, x, h;
  int eta;  // -1 after death
  double pi, c, p;
};

struct PathBundle {
  std::vector<PathRecord> paths;
  std::vector<std::vector<TrajectoryPoint>> trajectories;
  bool antithetic = false;
  double dt = 0.0;
  std::size_t inadmissible = 0;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_effective = 0;  // independent samples (pairs when antithetic)
  std::size_t n_paths = 0;
  std::size_t inadmissible = 0;
};

/// Wealth stepped with controls frozen per step (the r x part integrated exactly),
/// exact habit steps, per-step Bernoulli health
/// transitions and death. One random stream per path (per pair when
/// antithetic), so results do not depend on thread count or path count.
PathBundle simulate(const ModelParams& params, const PolicyOracle& policy, const SimConfig& cfg);

MCEstimate estimate_objective(const PathBundle& bundle);

/// Pairwise (cascade) summation; the order is fixed by the input order.
double pairwise_sum(std::span<const double> values);

/// Columns path,t,X,h,eta,pi,c,p for the recorded trajectories.
void write_paths_csv(std::ostream& out, const PathBundle& bundle);

}  // namespace healthshock
