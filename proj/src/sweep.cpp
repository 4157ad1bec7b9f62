#include "healthshock/sweep.hpp"

#include <future>
#include <iomanip>
#include <sstream>

#include "healthshock/alive_solver.hpp"
#include "healthshock/dead_solver.hpp"

namespace healthshock {

void SweepSpec::validate() const {
  if (axis.empty()) throw Error(ErrorCode::UsageError, "sweep axis is empty");
  if (values.size() < 2) throw Error(ErrorCode::UsageError, "a sweep needs at least two values");
  for (double t : times)
    if (!std::isfinite(t)) throw Error(ErrorCode::UsageError, "sweep times must be finite");
}

std::string resolve_axis(const std::string& alias) {
  if (alias == "xi1") return "income.xi.1";
  if (alias == "k1") return "hazard.excess.1.k1";
  if (alias == "k2") return "hazard.excess.1.k2";
  if (alias == "alpha") return "habit.alpha";
  if (alias == "beta") return "habit.beta";
  return alias;
}

std::vector<std::string> sweep_preset_names() { return {"eta", "xi1", "k1", "k2", "alpha", "beta"}; }

SweepSpec sweep_preset(const std::string& name) {
  SweepSpec s;
  s.name = name;
  s.axis = resolve_axis(name);
  // Illness parameters only move the sick state's controls; habit
  // parameters are shown for the healthy household.
  if (name == "eta") {
    s.values = {0, 1};
  } else if (name == "xi1") {
    s.values = {1.1, 1.25, 1.5};
    s.state = 1;
  } else if (name == "k1") {
    s.values = {0.02, 0.032, 0.05};
    s.state = 1;
  } else if (name == "k2") {
    s.values = {0.002, 0.0043, 0.006};
    s.state = 1;
  } else if (name == "alpha") {
    s.values = {0.05, 0.1, 0.15};
  } else if (name == "beta") {
    s.values = {0.12, 0.174, 0.25};
  } else {
    throw Error(ErrorCode::UsageError, "unknown sweep preset '" + name + "' (eta, xi1, k1, k2, alpha, beta)");
  }
  return s;
}

std::vector<double> uniform_times(double horizon, int count) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(horizon * k / count);
  return t;
}

namespace {

std::string format_value(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

SweepSeries solve_point(const ScenarioConfig& base, const SweepSpec& spec, double value,
                        const std::vector<double>& times, double x, double h) {
  SweepSeries s;
  s.value = value;
  ModelParams params = base.model;
  if (spec.axis == "eta") {
    s.state = static_cast<int>(value);
    if (static_cast<double>(s.state) != value) throw Error(ErrorCode::UsageError, "eta values must be integers");
  } else {
    Json doc = base.document;
    apply_override(doc, spec.axis, Json(value));
    params = params_from_json(doc["model"]);
    s.state = spec.state;
  }
  params.validate();
  check_state(params, s.state);
  const DeadCoefficients dead = solve_dead(params);
  AliveSolverOptions options;
  options.step_doubling_check = false;
  const AliveCoefficients coeffs = solve_alive(params, dead, options);
  for (double t : times) {
    const PolicyDecision d = alive_policy(t, x, h, s.state, coeffs, params);
    s.pi.push_back(d.pi);
    s.c.push_back(d.c);
    s.p.push_back(d.p.value_or(0.0));
  }
  return s;
}

}  // namespace

SweepResult run_sweep(const ScenarioConfig& base, const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.spec = spec;
  result.times = spec.times.empty() ? uniform_times(base.model.horizon_T, 40) : spec.times;
  for (double t : result.times) check_time(base.model, t);
  result.x = spec.x.value_or(base.model.x0);
  result.h = spec.h.value_or(base.model.habit.h0);

  std::vector<std::future<SweepSeries>> jobs;
  for (double v : spec.values)
    jobs.push_back(std::async(std::launch::async, [&, v] { return solve_point(base, spec, v, result.times, result.x, result.h); }));
  // Collect in axis order; the first failure (in that order) wins.
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    try {
      result.series.push_back(jobs[k].get());
    } catch (const Error& e) {
      for (std::size_t j = k + 1; j < jobs.size(); ++j) jobs[j].wait();
      throw Error(e.code(), "sweep " + spec.axis + "=" + format_value(spec.values[k]) + ": " + e.what());
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "t,axis,value,state,control,amount\n" << std::setprecision(12);
  for (const auto& s : r.series)
    for (const auto& [control, v] : {std::pair{"pi", &s.pi}, std::pair{"c", &s.c}, std::pair{"p", &s.p}}) {
      for (std::size_t k = 0; k < r.times.size(); ++k)
        out << r.times[k] << ',' << r.spec.axis << ',' << format_value(s.value) << ',' << s.state << ',' << control
            << ',' << (*v)[k] << '\n';
    }
}

void write_sweep_gnuplot(std::ostream& out, const SweepResult& r, const std::string& csv_file) {
  const std::string label = r.spec.name.empty() ? r.spec.axis : r.spec.name;
  out << "# controls at x=" << format_value(r.x) << ", h=" << format_value(r.h) << " for " << r.spec.axis << '\n';
  out << "set datafile separator ','\n";
  out << "set terminal pngcairo size 1500,450\n";
  out << "set output '" << label << ".png'\n";
  out << "set multiplot layout 1,3\n";
  out << "set xlabel 't'\n";
  const std::pair<const char*, const char*> panels[] = {{"pi", "pi*"}, {"c", "c*"}, {"p", "p*"}};
  for (const auto& [control, title] : panels) {
    out << "set title '" << title << "'\n";
    out << "plot";
    for (std::size_t k = 0; k < r.series.size(); ++k) {
      const std::string v = format_value(r.series[k].value);
      out << (k ? ", \\\n    " : " ") << "'" << csv_file << "' using 1:((strcol(5) eq '" << control
          << "' && strcol(3) eq '" << v << "') ? $6 : NaN) with lines title '" << label << "=" << v << "'";
    }
    out << '\n';
  }
  out << "unset multiplot\n";
}

}  // namespace healthshock
