#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "healthshock/config.hpp"

namespace healthshock {

/// Re-solve the model for each value of one parameter and tabulate the
/// closed-form controls at a fixed (x, h) over a time grid. The special axis
/// "eta" varies the evaluation health state instead of a parameter.
struct SweepSpec {
  std::string name;  // used for file names
  std::string axis;  // dotted model key, or "eta"
  std::vector<double> values;
  int state = 0;                // evaluation state (ignored for the eta axis)
  std::optional<double> x;      // defaults to x0
  std::optional<double> h;      // defaults to h0
  std::vector<double> times;    // defaults to k T / 40, k = 0..39

  void validate() const;  // UsageError
};

/// Short names: eta, xi1, k1, k2, alpha, beta. Anything else is returned unchanged.
std::string resolve_axis(const std::string& alias);

/// The six standard experiments (eta, xi1, k1, k2, alpha, beta).
SweepSpec sweep_preset(const std::string& name);
std::vector<std::string> sweep_preset_names();

/// k T / count for k = 0 .. count - 1.
std::vector<double> uniform_times(double horizon, int count);

struct SweepSeries {
  double value = 0.0;
  int state = 0;
  std::vector<double> pi, c, p;  // aligned with SweepResult::times
};

struct SweepResult {
  SweepSpec spec;
  std::vector<double> times;
  double x = 0.0;
  double h = 0.0;
  std::vector<SweepSeries> series;  // in the order of spec.values
};

/// Solves every axis value concurrently; failures are rethrown with the value.
SweepResult run_sweep(const ScenarioConfig& base, const SweepSpec& spec);

/// Long-form rows t,axis,value,state,control,amount.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// A gnuplot script drawing the three control panels from `csv_file`.
void write_sweep_gnuplot(std::ostream& out, const SweepResult& result, const std::string& csv_file);

}  // namespace healthshock
