#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "healthshock/alive_solver.hpp"
#include "healthshock/dead_solver.hpp"
#include "healthshock/model.hpp"
#include "healthshock/policy.hpp"
#include "healthshock/simulation.hpp"

namespace healthshock {

/// Evaluation grid. Times are uniform on [0, T] (both ends included), habits
/// uniform on [0, h_max], and wealth sits a log-spaced margin w above the
/// admissibility floor of the point: x = floor(t, h) + w with w in [w_min, w_max].
struct GridSpec {
  std::size_t n_t = 50;
  std::size_t n_x = 20;
  std::size_t n_h = 10;
  double h_max = 1e4;
  double w_min = 0.1;
  double w_max = 1e6;

  std::size_t size() const { return n_t * n_x * n_h; }
  void validate() const;  // UsageError on an empty or inverted grid
};

/// Parses "NTxNXxNH", e.g. "50x20x10".
GridSpec parse_grid(const std::string& text);

struct GridPoint {
  double t = 0.0;
  double x = 0.0;
  double h = 0.0;
  int state = -1;  // -1: post-death
};

/// How the Markov coupling term of the alive HJB is evaluated.
///   Exact:  sum_j q_ij [V~(t, x, h, j) - V~(t, x, h, i)], each state with its own A_j, M_j.
///   Ansatz: sum_j q_ij [(G_j/G_i)^gamma - 1] V~(t, x, h, i), i.e. as if X_j = X_i.
/// The coefficient system is built on the second form, so the two agree only
/// when the states share A and M.
enum class CouplingMode { Exact, Ansatz };

CouplingMode parse_coupling(const std::string& text);
std::string to_string(CouplingMode mode);

struct ResidualPoint {
  GridPoint where;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
};

struct ResidualReport {
  std::string name;
  double max_abs_residual = 0.0;
  /// |bracket| / (sum of the absolute values of its terms).
  double max_rel_residual = 0.0;
  double threshold = 0.0;
  GridSpec grid;
  std::size_t n_points = 0;
  ResidualPoint worst;
  std::vector<ResidualPoint> worst_k;  // descending by relative residual

  bool passed() const { return max_rel_residual <= threshold; }
};

inline constexpr double kDeadHjbTolerance = 1e-6;
inline constexpr double kAliveHjbTolerance = 1e-5;
inline constexpr double kFocTolerance = 1e-5;
inline constexpr double kOdeTolerance = 1e-6;
inline constexpr double kBoundaryTolerance = 1e-12;
inline constexpr double kStepDoublingTolerance = 1e-8;

/// Grid for the post-death problem (floor h B(t)) or for one alive state
/// (floor max_j(-M_j - h A_j) so every state's effective wealth is positive).
std::vector<GridPoint> make_grid(const GridSpec& spec, const ModelParams& params,
                                 const AliveCoefficients& coeffs, std::optional<int> state);

ResidualReport check_dead_hjb_at(const DeadCoefficients& coeffs, const ModelParams& params,
                                 const std::vector<GridPoint>& grid, const GridSpec& spec = {});
ResidualReport check_dead_hjb(const DeadCoefficients& coeffs, const ModelParams& params,
                              const GridSpec& spec = {});

ResidualReport check_alive_hjb_at(const AliveCoefficients& coeffs, const ModelParams& params,
                                  const std::vector<GridPoint>& grid, CouplingMode coupling = CouplingMode::Exact,
                               const GridSpec& spec = {});
/// One report per health state.
std::vector<ResidualReport> check_alive_hjb(const AliveCoefficients& coeffs, const ModelParams& params,
                                            const GridSpec& spec = {},
                                            CouplingMode coupling = CouplingMode::Exact);

/// Closed-form controls against controls rebuilt from central finite
/// differences of the value functions (post-death and every alive state).
ResidualReport check_focs(const AliveCoefficients& coeffs, const ModelParams& params,
                          const GridSpec& spec = {});

/// Hermite-interpolated table derivatives against the coefficient ODE
/// right-hand sides at cell midpoints, scaled by each component's sup norm.
ResidualReport check_coefficient_odes(const AliveCoefficients& coeffs, const ModelParams& params);

/// Terminal conditions: V_d(T) = Psi_d(T), A_i(T) = M_i(T) = 0, G_i(T) closed form.
ResidualReport check_boundary(const AliveCoefficients& coeffs, const ModelParams& params);

/// Scales a coefficient table (values and slopes) by 1 + eps. Names: g, G
/// (every state), G<i>, A<i>, M<i>.
void corrupt(AliveCoefficients& coeffs, const std::string& name, double eps);
/// Parses NAME:EPS and applies it.
void apply_corruption(AliveCoefficients& coeffs, const std::string& spec, int n_states);

struct DominanceRow {
  Perturbation perturbation;
  MCEstimate estimate;
  double difference = 0.0;   // J_perturbed - J_optimal
  double combined_se = 0.0;  // sqrt(se_opt^2 + se_perturbed^2)
  double paired_se = 0.0;    // std error of the per-sample differences
  bool passed = false;       // difference <= 3 combined_se
};

/// The six standard perturbations: merton x0.5/x1.5, consumption x0.9/x1.1, premium x0/x2.
std::vector<Perturbation> standard_perturbations();

std::vector<DominanceRow> dominance_battery(const ModelParams& params, const PolicyOracle& optimal,
                                            const PathBundle& optimal_paths, const SimConfig& cfg,
                                            const std::vector<Perturbation>& perturbations);

struct MCValueReport {
  double closed_form = 0.0;  // V(0, x0, h0, eta0)
  MCEstimate estimate;
  double z_score = 0.0;      // (J - V) / std_error
  double rel_std_error = 0.0;
  bool within_3se = false;
  double min_effective_wealth = 0.0;  // over all optimal paths
  std::vector<DominanceRow> dominance;

  bool dominance_passed() const;
};

/// MC estimate under the closed-form policy against the closed-form value,
/// plus the dominance battery when `run_dominance` is set (same config, CRN).
MCValueReport check_mc_value(const ModelParams& params, std::shared_ptr<const AliveCoefficients> coeffs,
                             const SimConfig& cfg, bool run_dominance);

struct StepHalvingReport {
  MCEstimate coarse;
  MCEstimate fine;
  double difference = 0.0;
  double combined_se = 0.0;
  bool passed = false;  // |difference| < 2 combined_se
};

StepHalvingReport check_mc_step_halving(const ModelParams& params,
                                        std::shared_ptr<const AliveCoefficients> coeffs, const SimConfig& cfg);

/// Plain-text block per report, and CSV with one row per worst-k point.
void write_report_text(std::ostream& out, const ResidualReport& report);
void write_reports_csv(std::ostream& out, const std::vector<ResidualReport>& reports);

}  // namespace healthshock
