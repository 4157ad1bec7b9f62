#pragma once

#include <ostream>
#include <string>

#include "healthshock/alive_solver.hpp"
#include "healthshock/model.hpp"

namespace healthshock {

/// First line of every emitted CSV: "# healthshock <version> config_hash=<hash>".
std::string provenance_header(const std::string& config_hash);

/// Scalar results of a solve as `quantity,value` rows: N, B(0), per-state
/// coefficients at t = 0, V(0, x0, h0, eta0), solver grids and tolerances.
void write_summary_csv(std::ostream& out, const ModelParams& params, const AliveCoefficients& coeffs);

}  // namespace healthshock
