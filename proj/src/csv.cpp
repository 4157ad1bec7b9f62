#include "healthshock/csv.hpp"

#include <iomanip>

#include "healthshock/config.hpp"

namespace healthshock {

std::string provenance_header(const std::string& config_hash) {
  return "# healthshock " + std::string(kToolVersion) + " config_hash=" + config_hash;
}

void write_summary_csv(std::ostream& out, const ModelParams& params, const AliveCoefficients& coeffs) {
  out << "quantity,value\n" << std::setprecision(17);
  out << "N," << coeffs.dead.N << '\n';
  out << "B(0)," << coeffs.dead.B(0.0) << '\n';
  out << "g(0)," << coeffs.dead.g.value(0.0) << '\n';
  for (int i = 0; i < coeffs.n_states(); ++i) {
    const auto& sc = coeffs.at(i);
    const std::string s = std::to_string(i);
    out << "G_" << s << "(0)," << sc.G.values().front() << '\n';
    out << "A_" << s << "(0)," << sc.A.values().front() << '\n';
    out << "M_y_" << s << "(0)," << sc.M_y.values().front() << '\n';
    out << "M_B_" << s << "(0)," << sc.M_B.values().front() << '\n';
  }
  out << "V(0;x0;h0;eta0)," << alive_value(0.0, params.x0, params.habit.h0, params.eta0, coeffs, params) << '\n';
  out << "dead_nodes," << coeffs.dead.g.size() << '\n';
  out << "alive_steps," << coeffs.at(0).G.size() - 1 << '\n';
  out << "rk4_step_doubling_change," << coeffs.step_doubling_change << '\n';
  out << "quadrature_rel_tol," << 1e-13 << '\n';
}

}  // namespace healthshock
