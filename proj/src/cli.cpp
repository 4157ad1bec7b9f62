#include "healthshock/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "healthshock/alive_solver.hpp"
#include "healthshock/calibration.hpp"
#include "healthshock/config.hpp"
#include "healthshock/csv.hpp"
#include "healthshock/dead_solver.hpp"
#include "healthshock/policy.hpp"
#include "healthshock/simulation.hpp"
#include "healthshock/sweep.hpp"
#include "healthshock/verification.hpp"

namespace healthshock {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config = std::string(kPaperDefaultsToken);
  std::vector<std::string> sets;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON scenario file, or paper_defaults")->capture_default_str();
  cmd->add_option("--set", o.sets, "override key=value (repeatable, dotted keys)")->take_all();
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
}

ScenarioConfig load(const CommonOptions& o, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> all = o.sets;
  all.insert(all.end(), extra.begin(), extra.end());
  return resolve_config(load_config_document(o.config), all);
}

// Opens `name` in the output directory and writes the provenance line.
std::ofstream open_output(const CommonOptions& o, const std::string& name, const std::string& hash,
                          bool provenance = true) {
  fs::create_directories(o.out_dir);
  const fs::path path = fs::path(o.out_dir) / name;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::UsageError, "cannot write '" + path.string() + "'");
  if (provenance) f << provenance_header(hash) << '\n';
  return f;
}

std::shared_ptr<AliveCoefficients> solve_all(const ModelParams& params) {
  const DeadCoefficients dead = solve_dead(params);
  return std::make_shared<AliveCoefficients>(solve_alive(params, dead));
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidState:
    case ErrorCode::TimeOutOfRange:
    case ErrorCode::DegenerateHabit:
    case ErrorCode::GridOutsideDomain:
    case ErrorCode::DegenerateTable:
    case ErrorCode::NonPositiveRate:
      return kExitUsage;
    default:
      return kExitCheckFailed;
  }
}

// --- solve ------------------------------------------------------------------

int cmd_solve(const CommonOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = load(o);
  const auto coeffs = solve_all(cfg.model);
  const std::string hash = cfg.hash();
  {
    auto f = open_output(o, "dead_coeffs.csv", hash);
    write_dead_csv(f, coeffs->dead);
  }
  {
    auto f = open_output(o, "alive_coeffs.csv", hash);
    write_alive_csv(f, *coeffs);
  }
  {
    auto f = open_output(o, "summary.csv", hash);
    write_summary_csv(f, cfg.model, *coeffs);
  }
  out << std::setprecision(10) << "N = " << coeffs->dead.N << "\nB(0) = " << coeffs->dead.B(0.0) << '\n';
  for (int i = 0; i < coeffs->n_states(); ++i) out << "G_" << i << "(0) = " << coeffs->at(i).G.value(0.0) << '\n';
  out << "V(0, x0, h0, eta0) = "
      << alive_value(0.0, cfg.model.x0, cfg.model.habit.h0, cfg.model.eta0, *coeffs, cfg.model) << '\n';
  out << "wrote dead_coeffs.csv, alive_coeffs.csv, summary.csv to " << o.out_dir << '\n';
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimOptions {
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::optional<double> dt;
  std::optional<std::string> perturb;
  bool antithetic = false;
};

std::vector<std::string> sim_overrides(const SimOptions& s) {
  std::vector<std::string> v;
  if (s.seed) v.push_back("simulation.seed=" + std::to_string(*s.seed));
  if (s.paths) {
    if (*s.paths < 1) throw Error(ErrorCode::UsageError, "--paths must be >= 1");
    v.push_back("simulation.n_paths=" + std::to_string(*s.paths));
  }
  if (s.dt) {
    if (!(*s.dt > 0.0)) throw Error(ErrorCode::UsageError, "--dt must be positive");
    std::ostringstream dt;
    dt << std::setprecision(17) << *s.dt;
    v.push_back("simulation.dt=" + dt.str());
  }
  if (s.antithetic) v.push_back("simulation.antithetic=true");
  return v;
}

void add_sim_options(CLI::App* cmd, SimOptions& s) {
  cmd->add_option("--seed", s.seed, "64-bit RNG seed");
  cmd->add_option("--paths", s.paths, "number of Monte Carlo paths (>= 1)");
  cmd->add_option("--dt", s.dt, "simulation step in years");
  cmd->add_flag("--antithetic", s.antithetic, "antithetic normal increments");
}

void write_mc_row(std::ostream& f, const std::string& policy, const MCEstimate& e, const std::string& rest) {
  f << policy << ',' << e.mean << ',' << e.std_error << ',' << e.n_effective << ',' << e.n_paths << ','
    << e.inadmissible << ',' << rest << '\n';
}

int cmd_simulate(const CommonOptions& o, const SimOptions& s, std::ostream& out) {
  std::optional<Perturbation> q;
  if (s.perturb) q = parse_perturbation(*s.perturb);
  const ScenarioConfig cfg = load(o, sim_overrides(s));
  const auto coeffs = solve_all(cfg.model);
  const std::string hash = cfg.hash();
  const double V = alive_value(0.0, cfg.model.x0, cfg.model.habit.h0, cfg.model.eta0, *coeffs, cfg.model);

  const PolicyOracle optimal = optimal_policy(cfg.model, coeffs, cfg.simulation.dt);
  const PathBundle base = simulate(cfg.model, optimal, cfg.simulation);
  const MCEstimate est = estimate_objective(base);
  double min_eff = std::numeric_limits<double>::infinity();
  for (const auto& p : base.paths) min_eff = std::min(min_eff, p.min_effective_wealth);

  auto f = open_output(o, "mc_report.csv", hash);
  f << "policy,mean,std_error,n_effective,n_paths,inadmissible,closed_form,z_score,difference,combined_se,"
       "paired_se,dominance_ok\n"
    << std::setprecision(12);
  const double z = (est.mean - V) / est.std_error;
  {
    std::ostringstream rest;
    rest << std::setprecision(12) << V << ',' << z << ",,,,";
    write_mc_row(f, "optimal", est, rest.str());
  }
  out << std::setprecision(8) << "V(0, x0, h0, eta0) = " << V << "\nJ_MC = " << est.mean << " +- " << est.std_error
      << " (z = " << z << ", inadmissible paths " << est.inadmissible << ", min effective wealth " << min_eff
      << ")\n";

  int code = kExitOk;
  if (q && !q->identity()) {
    const auto rows = dominance_battery(cfg.model, optimal, base, cfg.simulation, {*q});
    const auto& r = rows.front();
    std::ostringstream rest;
    rest << std::setprecision(12) << ",," << r.difference << ',' << r.combined_se << ',' << r.paired_se << ','
         << (r.passed ? 1 : 0);
    write_mc_row(f, q->label(), r.estimate, rest.str());
    out << q->label() << ": J = " << r.estimate.mean << ", J - J_opt = " << r.difference << " (3 combined se = "
        << 3.0 * r.combined_se << ") " << (r.passed ? "dominated" : "NOT dominated") << '\n';
    if (!r.passed) code = kExitCheckFailed;
  }
  {
    auto pf = open_output(o, "paths.csv", hash);
    write_paths_csv(pf, base);
  }
  out << "wrote mc_report.csv, paths.csv to " << o.out_dir << '\n';
  return code;
}

// --- verify -----------------------------------------------------------------

struct VerifyOptions {
  std::optional<std::string> grid;
  std::optional<std::string> coupling;
  std::vector<std::string> corrupt;
  bool mc = false;
  SimOptions sim;
};

int cmd_verify(const CommonOptions& o, const VerifyOptions& v, std::ostream& out) {
  std::vector<std::string> extra = sim_overrides(v.sim);
  if (v.grid) {
    const GridSpec g = parse_grid(*v.grid);
    extra.push_back("verification.n_t=" + std::to_string(g.n_t));
    extra.push_back("verification.n_x=" + std::to_string(g.n_x));
    extra.push_back("verification.n_h=" + std::to_string(g.n_h));
  }
  if (v.coupling) extra.push_back("verification.coupling=" + to_string(parse_coupling(*v.coupling)));
  const ScenarioConfig cfg = load(o, extra);
  cfg.grid.validate();
  auto coeffs = solve_all(cfg.model);
  for (const auto& c : v.corrupt) apply_corruption(*coeffs, c, cfg.model.n_states());

  std::vector<ResidualReport> reports;
  reports.push_back(check_dead_hjb(coeffs->dead, cfg.model, cfg.grid));
  for (auto& r : check_alive_hjb(*coeffs, cfg.model, cfg.grid, cfg.coupling)) reports.push_back(std::move(r));
  reports.push_back(check_focs(*coeffs, cfg.model, cfg.grid));
  reports.push_back(check_coefficient_odes(*coeffs, cfg.model));
  reports.push_back(check_boundary(*coeffs, cfg.model));

  bool ok = true;
  std::ostringstream text;
  if (!v.corrupt.empty()) {
    text << "corrupted tables:";
    for (const auto& c : v.corrupt) text << ' ' << c;
    text << '\n';
  }
  for (const auto& r : reports) {
    write_report_text(text, r);
    ok = ok && r.passed();
  }
  const bool doubling_ok = coeffs->step_doubling_change < kStepDoublingTolerance;
  text << std::setprecision(6) << "rk4_step_doubling: " << (doubling_ok ? "PASS" : "FAIL")
       << "  change=" << coeffs->step_doubling_change << "  threshold=" << kStepDoublingTolerance << '\n';
  ok = ok && doubling_ok;

  if (v.mc) {
    const MCValueReport mc = check_mc_value(cfg.model, coeffs, cfg.simulation, true);
    const bool mc_ok = mc.within_3se && mc.rel_std_error <= 0.005;
    text << std::setprecision(8) << "mc_value: " << (mc_ok ? "PASS" : "FAIL") << "  V=" << mc.closed_form
         << "  J=" << mc.estimate.mean << "  se=" << mc.estimate.std_error << "  z=" << mc.z_score
         << "  rel_se=" << mc.rel_std_error << "  inadmissible=" << mc.estimate.inadmissible << '\n';
    for (const auto& d : mc.dominance)
      text << "  dominance " << d.perturbation.label() << ": " << (d.passed ? "PASS" : "FAIL")
           << "  diff=" << d.difference << "  3*combined_se=" << 3.0 * d.combined_se << '\n';
    ok = ok && mc_ok && mc.dominance_passed();
  }
  text << "overall: " << (ok ? "PASS" : "FAIL") << '\n';

  const std::string hash = cfg.hash();
  {
    auto f = open_output(o, "verify_report.txt", hash);
    f << text.str();
  }
  {
    auto f = open_output(o, "verify_report.csv", hash);
    write_reports_csv(f, reports);
  }
  out << text.str();
  return ok ? kExitOk : kExitCheckFailed;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateOptions {
  std::string model = "gompertz";
  std::string table;
  std::optional<std::string> base;
  std::optional<double> base_age;
};

int cmd_calibrate(const CommonOptions& o, const CalibrateOptions& c, std::ostream& out) {
  FitResult fit;
  if (c.model == "gompertz") {
    fit = fit_gompertz(load_life_table(c.table, TableKind::Mortality));
  } else if (c.model == "illness") {
    if (!c.base) throw Error(ErrorCode::UsageError, "--model illness needs --base with a prior Gompertz fit file");
    std::ifstream in(*c.base);
    if (!in) throw Error(ErrorCode::UsageError, "cannot open Gompertz fit file '" + *c.base + "'");
    const FitResult base = read_fit_csv(in, *c.base);
    if (base.model != "gompertz") throw Error(ErrorCode::UsageError, "'" + *c.base + "' is not a Gompertz fit");
    fit = fit_illness_excess(load_life_table(c.table, TableKind::Mortality), base);
  } else if (c.model == "transition") {
    fit = fit_transition(load_life_table(c.table, TableKind::Morbidity), c.base_age);
  } else {
    throw Error(ErrorCode::UsageError, "--model must be gompertz, illness or transition");
  }
  // The hash covers the table bytes so a refit of the same file is identical.
  std::ifstream raw(c.table, std::ios::binary);
  std::ostringstream bytes;
  bytes << c.model << '\n' << raw.rdbuf();
  auto f = open_output(o, "fit_" + c.model + ".csv", hex64(fnv1a64(bytes.str())));
  write_fit_csv(f, fit);
  write_fit_csv(out, fit);
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepOptions {
  std::vector<std::string> axes;
  std::vector<double> values;
  std::optional<int> state;
  std::vector<double> times;
  std::optional<double> x;
  std::optional<double> h;
  bool all = false;
};

int cmd_sweep(const CommonOptions& o, const SweepOptions& s, std::ostream& out) {
  const ScenarioConfig cfg = load(o);
  std::vector<SweepSpec> specs;
  const auto presets = sweep_preset_names();
  if (s.all) {
    if (!s.axes.empty() || !s.values.empty()) throw Error(ErrorCode::UsageError, "--all excludes --axis/--values");
    for (const auto& n : presets) specs.push_back(sweep_preset(n));
  } else {
    if (s.axes.size() != 1) throw Error(ErrorCode::UsageError, "give exactly one --axis, or --all");
    const std::string& a = s.axes.front();
    SweepSpec spec;
    if (std::find(presets.begin(), presets.end(), a) != presets.end()) {
      spec = sweep_preset(a);
    } else {
      spec.name = a;
      spec.axis = resolve_axis(a);
    }
    if (!s.values.empty()) spec.values = s.values;
    specs.push_back(spec);
  }
  const std::string hash = cfg.hash();
  for (auto& spec : specs) {
    if (s.state) spec.state = *s.state;
    if (!s.times.empty()) spec.times = s.times;
    spec.x = s.x;
    spec.h = s.h;
    const SweepResult r = run_sweep(cfg, spec);
    const std::string stem = "sweep_" + spec.name;
    {
      auto f = open_output(o, stem + ".csv", hash);
      write_sweep_csv(f, r);
    }
    {
      auto f = open_output(o, stem + ".gp", hash);
      write_sweep_gnuplot(f, r, stem + ".csv");
    }
    out << "wrote " << stem << ".csv, " << stem << ".gp (" << r.series.size() << " values x " << r.times.size()
        << " times)\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Household investment, consumption and life insurance under health shocks and habit formation",
               "healthshock"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonOptions common;
  auto* solve = app.add_subcommand("solve", "solve the coefficient systems and write tables + summary");
  add_common(solve, common);

  SimOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo of the optimal (or perturbed) policy");
  add_common(simulate_cmd, common);
  add_sim_options(simulate_cmd, sim);
  simulate_cmd->add_option("--perturb", sim.perturb, "NAME:FACTOR with NAME in merton|consumption|premium");

  VerifyOptions ver;
  auto* verify = app.add_subcommand("verify", "HJB residuals, FOCs, ODE consistency (and optionally MC)");
  add_common(verify, common);
  add_sim_options(verify, ver.sim);
  verify->add_option("--grid", ver.grid, "NTxNXxNH, default 50x20x10");
  verify->add_option("--coupling", ver.coupling, "exact|ansatz evaluation of the Markov coupling term");
  verify->add_option("--corrupt", ver.corrupt, "scale a coefficient table: NAME:EPS (g, G, G<i>, A<i>, M<i>)")
      ->take_all();
  verify->add_flag("--mc", ver.mc, "also run the Monte Carlo value check and dominance battery");

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "fit hazard models to an age,rate[,weight] CSV table");
  add_common(calibrate, common);
  calibrate->add_option("--model", cal.model, "gompertz|illness|transition")->capture_default_str();
  calibrate->add_option("--table", cal.table, "CSV table")->required();
  calibrate->add_option("--base", cal.base, "Gompertz fit CSV (required for --model illness)");
  calibrate->add_option("--base-age", cal.base_age, "age at t = 0 for --model transition");

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "tabulate controls over a parameter sweep");
  add_common(sweep, common);
  sweep->add_option("--axis", sw.axes, "eta|xi1|k1|k2|alpha|beta or a dotted model key");
  sweep->add_option("--values", sw.values, "axis values")->delimiter(',');
  sweep->add_option("--state", sw.state, "evaluation health state");
  sweep->add_option("--times", sw.times, "output times")->delimiter(',');
  sweep->add_option("--wealth", sw.x, "comparison wealth (default x0)");
  sweep->add_option("--habit", sw.h, "comparison habit (default h0)");
  sweep->add_flag("--all", sw.all, "run the six standard experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(common, out);
    if (*simulate_cmd) return cmd_simulate(common, sim, out);
    if (*verify) return cmd_verify(common, ver, out);
    if (*calibrate) return cmd_calibrate(common, cal, out);
    if (*sweep) return cmd_sweep(common, sw, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace healthshock
