#include "healthshock/verification.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace healthshock {

void GridSpec::validate() const {
  if (n_t < 1 || n_x < 1 || n_h < 1) throw Error(ErrorCode::UsageError, "verification grid must be non-empty");
  if (!(h_max >= 0.0) || !(w_min > 0.0) || !(w_max >= w_min))
    throw Error(ErrorCode::UsageError, "verification grid ranges are inverted or nonpositive");
}

GridSpec parse_grid(const std::string& text) {
  GridSpec spec;
  std::size_t parsed[3] = {0, 0, 0};
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t end = k < 2 ? text.find('x', pos) : text.size();
    if (end == std::string::npos) throw Error(ErrorCode::UsageError, "grid must look like NTxNXxNH");
    const std::string part = text.substr(pos, end - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::UsageError, "grid must look like NTxNXxNH, got '" + text + "'");
    parsed[k] = std::stoul(part);
    pos = end + 1;
  }
  spec.n_t = parsed[0];
  spec.n_x = parsed[1];
  spec.n_h = parsed[2];
  spec.validate();
  return spec;
}

CouplingMode parse_coupling(const std::string& text) {
  if (text == "exact") return CouplingMode::Exact;
  if (text == "ansatz") return CouplingMode::Ansatz;
  throw Error(ErrorCode::UsageError, "coupling must be exact or ansatz, got '" + text + "'");
}

std::string to_string(CouplingMode mode) { return mode == CouplingMode::Exact ? "exact" : "ansatz"; }

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n, a);
  for (std::size_t k = 1; k < n; ++k) v[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  if (n > 1) v.back() = b;
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (double& e : v) e = std::exp(e);
  if (n > 1) {
    v.front() = a;
    v.back() = b;
  }
  return v;
}

// Accumulates residuals and keeps the k worst points.
class Collector {
 public:
  Collector(std::string name, double threshold, const GridSpec& spec, std::size_t keep = 10) : keep_(keep) {
    report_.name = std::move(name);
    report_.threshold = threshold;
    report_.grid = spec;
  }

  void add(const GridPoint& where, double abs_residual, double rel_residual) {
    ++report_.n_points;
    // A NaN residual must count as a failure, never be skipped by comparisons.
    if (std::isnan(abs_residual)) abs_residual = std::numeric_limits<double>::infinity();
    if (std::isnan(rel_residual)) rel_residual = std::numeric_limits<double>::infinity();
    report_.max_abs_residual = std::max(report_.max_abs_residual, abs_residual);
    const ResidualPoint point{where, abs_residual, rel_residual};
    auto& w = report_.worst_k;
    const auto pos = std::upper_bound(w.begin(), w.end(), point, [](const ResidualPoint& a, const ResidualPoint& b) {
      return a.rel_residual > b.rel_residual;
    });
    if (static_cast<std::size_t>(pos - w.begin()) < keep_) {
      w.insert(pos, point);
      if (w.size() > keep_) w.pop_back();
    }
  }

  ResidualReport finish() {
    if (!report_.worst_k.empty()) {
      report_.worst = report_.worst_k.front();
      report_.max_rel_residual = report_.worst.rel_residual;
    }
    return std::move(report_);
  }

 private:
  ResidualReport report_;
  std::size_t keep_;
};

// Sum of terms whose zero is checked, normalized by the sum of magnitudes.
struct Bracket {
  double sum = 0.0;
  double magnitude = 0.0;
  void operator+=(double term) {
    sum += term;
    magnitude += std::abs(term);
  }
  double relative() const { return magnitude > 0.0 ? std::abs(sum) / magnitude : std::abs(sum); }
};

double alive_floor(double t, double h, const AliveCoefficients& coeffs) {
  double floor = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < coeffs.n_states(); ++j)
    floor = std::max(floor, -coeffs.M(t, j, h) - h * coeffs.at(j).A.value(t));
  return floor;
}

double power_value(double G, double X, double gamma) {
  return std::pow(G, gamma) * std::pow(X, 1.0 - gamma) / (1.0 - gamma);
}

struct Partials {
  double V_x, V_xx, V_h;
};

// Central differences on the steps actually representable around (x, h):
// at |x| ~ 1e6 the rounding of x +- dx is a visible fraction of a small dx.
template <class F>
Partials fd_partials(F&& V, double x, double h, double dx, double dh) {
  const double xp = x + dx, xm = x - dx;
  const double sp = xp - x, sm = x - xm;
  const double v0 = V(x, h), vp = V(xp, h), vm = V(xm, h);
  const double hp = h + dh, hm = h - dh;
  Partials d;
  d.V_x = (vp - vm) / (sp + sm);
  d.V_xx = 2.0 * ((vp - v0) / sp - (v0 - vm) / sm) / (sp + sm);
  d.V_h = (V(x, hp) - V(x, hm)) / (hp - hm);
  return d;
}

}  // namespace

std::vector<GridPoint> make_grid(const GridSpec& spec, const ModelParams& params,
                                 const AliveCoefficients& coeffs, std::optional<int> state) {
  spec.validate();
  if (state) check_state(params, *state);
  const auto ts = linspace(0.0, params.horizon_T, spec.n_t);
  const auto hs = linspace(0.0, spec.h_max, spec.n_h);
  const auto ws = logspace(spec.w_min, spec.w_max, spec.n_x);
  std::vector<GridPoint> grid;
  grid.reserve(spec.size());
  for (double t : ts)
    for (double h : hs) {
      const double floor = state ? alive_floor(t, h, coeffs) : h * coeffs.dead.B(t);
      for (double w : ws) grid.push_back({t, floor + w, h, state.value_or(-1)});
    }
  return grid;
}

ResidualReport check_dead_hjb_at(const DeadCoefficients& coeffs, const ModelParams& params,
                                 const std::vector<GridPoint>& grid, const GridSpec& spec) {
  const double gamma = params.prefs.gamma;
  const double r = params.market.r;
  const double excess = params.market.mu - params.market.r;
  const double sigma = params.market.sigma;
  const double alpha = params.habit.alpha;
  const double beta = params.habit.beta;
  Collector out("dead_hjb", kDeadHjbTolerance, spec);

  for (const auto& pt : grid) {
    const double t = pt.t, x = pt.x, h = pt.h;
    const double B = coeffs.B(t);
    const double W = x - h * B;
    if (!(W > kWealthFloor) || t < 0.0 || t > coeffs.horizon)
      throw Error(ErrorCode::GridOutsideDomain, "dead grid point outside the admissible domain at t=" +
                                                    std::to_string(t) + ", x=" + std::to_string(x));
    const double g = coeffs.g.value(t);
    const double g_t = coeffs.g.derivative(t);
    const double Gg = std::pow(g, gamma);
    const double V_x = Gg * std::pow(W, -gamma);
    const double V_xx = -gamma * V_x / W;
    const double V_h = -B * V_x;
    const double V_t = gamma / (1.0 - gamma) * std::pow(g, gamma - 1.0) * g_t * std::pow(W, 1.0 - gamma) -
                       h * coeffs.B_prime(t) * V_x;

    const PolicyDecision d = dead_policy(t, x, h, coeffs, params);
    Bracket b;
    b += V_t;
    b += V_x * r * x;
    b += V_x * d.pi * excess;
    b += -V_x * d.c;
    b += V_h * alpha * d.c;
    b += -V_h * beta * h;
    b += 0.5 * sigma * sigma * d.pi * d.pi * V_xx;
    b += utility_dead(t, d.c, h, params.prefs);
    out.add(pt, std::abs(b.sum), b.relative());
  }
  return out.finish();
}

ResidualReport check_dead_hjb(const DeadCoefficients& coeffs, const ModelParams& params, const GridSpec& spec) {
  AliveCoefficients shell;
  shell.dead = coeffs;
  return check_dead_hjb_at(coeffs, params, make_grid(spec, params, shell, std::nullopt), spec);
}

ResidualReport check_alive_hjb_at(const AliveCoefficients& coeffs, const ModelParams& params,
                                  const std::vector<GridPoint>& grid, CouplingMode coupling, const GridSpec& spec) {
  const double gamma = params.prefs.gamma;
  const double r = params.market.r;
  const double excess = params.market.mu - params.market.r;
  const double sigma = params.market.sigma;
  const double alpha = params.habit.alpha;
  const double beta = params.habit.beta;
  const int state = grid.empty() ? 0 : grid.front().state;
  Collector out("alive_hjb state " + std::to_string(state) + " (" + to_string(coupling) + " coupling)",
                kAliveHjbTolerance, spec);

  for (const auto& pt : grid) {
    const double t = pt.t, x = pt.x, h = pt.h;
    const int i = pt.state;
    check_state(params, i);
    if (t < 0.0 || t > coeffs.horizon)
      throw Error(ErrorCode::GridOutsideDomain, "alive grid time outside [0, T]: " + std::to_string(t));
    const double hd = h;  // habit at death held fixed at the evaluation habit
    const auto& sc = coeffs.at(i);
    const double A = sc.A.value(t);
    const double M = coeffs.M(t, i, hd);
    const double X = x + M + h * A;
    if (!(X > kWealthFloor))
      throw Error(ErrorCode::GridOutsideDomain, "alive grid point below the boundary at t=" + std::to_string(t) +
                                                    ", state " + std::to_string(i));
    const double G = sc.G.value(t);
    const double G_t = sc.G.derivative(t);
    const double A_t = sc.A.derivative(t);
    const double M_t = sc.M_y.derivative(t) - hd * sc.M_B.derivative(t);
    const double Vtil = power_value(G, X, gamma);
    const double V_x = std::pow(G, gamma) * std::pow(X, -gamma);
    const double V_xx = -gamma * V_x / X;
    const double V_h = A * V_x;
    const double V_t = (M_t + h * A_t) * V_x + gamma / (1.0 - gamma) * std::pow(X, 1.0 - gamma) *
                                                   std::pow(G, gamma - 1.0) * G_t;

    const double lam = params.hazard.lambda(t, i);
    const double surv = coeffs.survival(t, i);
    const PolicyDecision d = alive_policy(t, x, h, i, coeffs, params, hd);
    const double premium = d.p.value_or(0.0);

    Bracket b;
    b += V_t;
    b += V_x * r * x;
    b += V_x * d.pi * excess;
    b += V_x * income_rate(params, t, i);
    b += -V_x * premium;
    b += -V_x * d.c;
    b += V_h * alpha * d.c;
    b += -V_h * beta * h;
    b += 0.5 * sigma * sigma * d.pi * d.pi * V_xx;
    b += params.prefs.k_a[static_cast<std::size_t>(i)] * surv * std::exp(-params.prefs.rho * t) *
         std::pow(d.c - h, 1.0 - gamma) / (1.0 - gamma);
    if (lam > 0.0) {
      const double W_death = x + premium / lam - hd * coeffs.dead.B(t);
      b += lam * surv * std::pow(coeffs.dead.g.value(t), gamma) * std::pow(W_death, 1.0 - gamma) / (1.0 - gamma);
    }
    for (const auto& tr : params.states.transitions) {
      if (tr.from != i) continue;
      const double q = tr.at(t);
      double Vj = 0.0;
      const double Gj = coeffs.at(tr.to).G.value(t);
      if (coupling == CouplingMode::Exact) {
        const double Xj = x + coeffs.M(t, tr.to, hd) + h * coeffs.at(tr.to).A.value(t);
        if (!(Xj > kWealthFloor))
          throw Error(ErrorCode::GridOutsideDomain, "grid point inadmissible for state " + std::to_string(tr.to));
        Vj = power_value(Gj, Xj, gamma);
      } else {
        Vj = power_value(Gj, X, gamma);
      }
      b += q * Vj;
      b += -q * Vtil;
    }
    out.add(pt, std::abs(b.sum), b.relative());
  }
  return out.finish();
}

std::vector<ResidualReport> check_alive_hjb(const AliveCoefficients& coeffs, const ModelParams& params,
                                            const GridSpec& spec, CouplingMode coupling) {
  std::vector<ResidualReport> reports;
  for (int i = 0; i < params.n_states(); ++i)
    reports.push_back(check_alive_hjb_at(coeffs, params, make_grid(spec, params, coeffs, i), coupling, spec));
  return reports;
}

ResidualReport check_focs(const AliveCoefficients& coeffs, const ModelParams& params, const GridSpec& spec) {
  const double gamma = params.prefs.gamma;
  const double inv_gamma = 1.0 / gamma;
  const double excess = params.market.mu - params.market.r;
  const double sigma2 = params.market.sigma * params.market.sigma;
  const double alpha = params.habit.alpha;
  constexpr double kStep = 1e-4;
  Collector out("focs", kFocTolerance, spec);

  auto record = [&](const GridPoint& pt, double gap_pi, double gap_c, double gap_p) {
    const double worst = std::max({gap_pi, gap_c, gap_p});
    out.add(pt, worst, worst);
  };

  // Post-death controls.
  for (const auto& pt : make_grid(spec, params, coeffs, std::nullopt)) {
    const double t = pt.t, x = pt.x, h = pt.h;
    const double B = coeffs.dead.B(t);
    const double W = x - h * B;
    const double dx = kStep * W;
    const double dh = kStep * W / std::max(B, 1.0);
    auto V = [&](double xx, double hh) { return dead_value(t, xx, hh, coeffs.dead, params); };
    const auto [V_x, V_xx, V_h] = fd_partials(V, x, h, dx, dh);
    const double pi_fd = -excess * V_x / (sigma2 * V_xx);
    const double c_fd = h + std::pow(params.prefs.k_d * std::exp(-params.prefs.rho * t), inv_gamma) *
                                std::pow(V_x - alpha * V_h, -inv_gamma);
    const PolicyDecision d = dead_policy(t, x, h, coeffs.dead, params);
    record(pt, std::abs(pi_fd - d.pi) / std::abs(d.pi), std::abs(c_fd - d.c) / (d.c - h), 0.0);
  }

  for (int i = 0; i < params.n_states(); ++i) {
    const double k_a = params.prefs.k_a[static_cast<std::size_t>(i)];
    for (const auto& pt : make_grid(spec, params, coeffs, i)) {
      const double t = pt.t, x = pt.x, h = pt.h;
      const double hd = h;
      const double A = coeffs.at(i).A.value(t);
      const double X = x + coeffs.M(t, i, hd) + h * A;
      const double dx = kStep * X;
      const double dh = kStep * X / std::max(std::abs(A), 1.0);
      auto V = [&](double xx, double hh) { return alive_value_tilde(t, xx, hh, i, coeffs, params, hd); };
      const auto [V_x, V_xx, V_h] = fd_partials(V, x, h, dx, dh);
      const double surv = coeffs.survival(t, i);
      const double lam = params.hazard.lambda(t, i);

      const double pi_fd = -excess * V_x / (sigma2 * V_xx);
      const double c_fd = h + std::pow(k_a * surv * std::exp(-params.prefs.rho * t), inv_gamma) *
                                  std::pow(V_x - alpha * V_h, -inv_gamma);
      const double B = coeffs.dead.B(t);
      const double g = coeffs.dead.g.value(t);
      // (lambda V_x)^{-1/gamma} f^{1/gamma} = V_x^{-1/gamma} survival^{1/gamma}
      const double wealth_term = std::pow(V_x, -inv_gamma) * std::pow(surv, inv_gamma) * g;
      const double p_fd = lam * (hd * B - x + wealth_term);

      const PolicyDecision d = alive_policy(t, x, h, i, coeffs, params, hd);
      const double p_star = d.p.value_or(0.0);
      const double p_scale = std::abs(p_star) + lam * (std::abs(x) + hd * B + std::abs(wealth_term));
      record(pt, std::abs(pi_fd - d.pi) / std::abs(d.pi), std::abs(c_fd - d.c) / (d.c - h),
             p_scale > 0.0 ? std::abs(p_fd - p_star) / p_scale : 0.0);
    }
  }
  return out.finish();
}

ResidualReport check_coefficient_odes(const AliveCoefficients& coeffs, const ModelParams& params) {
  Collector out("coefficient_odes", kOdeTolerance, {});
  const int n = coeffs.n_states();
  const auto un = static_cast<std::size_t>(n);
  const std::size_t width = AliveOde::kWidth * un;

  // Post-death g, reported with state -1.
  {
    const auto& tab = coeffs.dead.g;
    double scale = 0.0;
    for (double s : tab.slopes()) scale = std::max(scale, std::abs(s));
    for (std::size_t k = 0; k + 1 < tab.size(); ++k) {
      const double t = tab.node(k) + 0.5 * tab.step();
      const double gap = std::abs(tab.derivative(t) - dead_g_rhs(t, tab.value(t), coeffs.dead, params));
      out.add({t, 0.0, 0.0, -1}, gap, gap / scale);
    }
  }

  const AliveOde ode(params, coeffs.dead);
  std::vector<double> scale(width, 0.0);
  auto table = [&](std::size_t component) -> const UniformTable& {
    const auto& sc = coeffs.states[component / AliveOde::kWidth];
    switch (component % AliveOde::kWidth) {
      case 0: return sc.A;
      case 1: return sc.M_y;
      case 2: return sc.M_B;
      default: return sc.G;
    }
  };
  for (std::size_t c = 0; c < width; ++c)
    for (double s : table(c).slopes()) scale[c] = std::max(scale[c], std::abs(s));

  const auto& lattice = coeffs.states.front().G;
  std::vector<double> y(width), dy(width), cum(un);
  for (std::size_t k = 0; k + 1 < lattice.size(); ++k) {
    const double t = lattice.node(k) + 0.5 * lattice.step();
    for (std::size_t c = 0; c < width; ++c) y[c] = table(c).value(t);
    for (std::size_t i = 0; i < un; ++i) cum[i] = coeffs.states[i].cum_hazard.value(t);
    ode(t, cum, y, dy);
    for (std::size_t c = 0; c < width; ++c) {
      const double gap = std::abs(table(c).derivative(t) - dy[c]);
      // x carries the component index within the state: 0 A, 1 M_y, 2 M_B, 3 G.
      out.add({t, static_cast<double>(c % AliveOde::kWidth), 0.0, static_cast<int>(c / AliveOde::kWidth)}, gap,
              scale[c] > 0.0 ? gap / scale[c] : gap);
    }
  }
  return out.finish();
}

ResidualReport check_boundary(const AliveCoefficients& coeffs, const ModelParams& params) {
  Collector out("boundary", kBoundaryTolerance, {});
  const double T = params.horizon_T;
  const double gamma = params.prefs.gamma;
  for (double x : {1.0, 35000.0, 1e6}) {
    const double vd = dead_value(T, x, params.habit.h0, coeffs.dead, params);
    const double psi = terminal_utility(T, x, std::nullopt, params.prefs);
    out.add({T, x, params.habit.h0, -1}, std::abs(vd - psi), std::abs(vd - psi) / std::abs(psi));
  }
  for (int i = 0; i < coeffs.n_states(); ++i) {
    const auto& sc = coeffs.at(i);
    const double A_T = sc.A.values().back();
    const double M_T = std::max(std::abs(sc.M_y.values().back()), std::abs(sc.M_B.values().back()));
    out.add({T, 0.0, 0.0, i}, std::abs(A_T), std::abs(A_T));
    out.add({T, 1.0, 0.0, i}, M_T, M_T);
    const double G_T = sc.G.values().back();
    const double expected = std::pow(params.prefs.omega_a[static_cast<std::size_t>(i)] * coeffs.survival(T, i) *
                                          std::exp(-params.prefs.rho * T),
                                      1.0 / gamma);
    out.add({T, 3.0, 0.0, i}, std::abs(G_T - expected), std::abs(G_T - expected) / expected);
  }
  return out.finish();
}

void corrupt(AliveCoefficients& coeffs, const std::string& name, double eps) {
  const double f = 1.0 + eps;
  auto state_index = [&](std::size_t prefix) {
    const std::string digits = name.substr(prefix);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::UsageError, "unknown coefficient table '" + name + "'");
    const int i = std::stoi(digits);
    if (i < 0 || i >= coeffs.n_states())
      throw Error(ErrorCode::UsageError, "coefficient table '" + name + "' names a missing state");
    return static_cast<std::size_t>(i);
  };
  if (name == "g") {
    coeffs.dead.g.scale(f);
  } else if (name == "G") {
    for (auto& sc : coeffs.states) sc.G.scale(f);
  } else if (name.rfind('G', 0) == 0) {
    coeffs.states[state_index(1)].G.scale(f);
  } else if (name.rfind('A', 0) == 0) {
    coeffs.states[state_index(1)].A.scale(f);
  } else if (name.rfind('M', 0) == 0) {
    auto& sc = coeffs.states[state_index(1)];
    sc.M_y.scale(f);
    sc.M_B.scale(f);
  } else {
    throw Error(ErrorCode::UsageError, "unknown coefficient table '" + name + "' (g, G, G<i>, A<i>, M<i>)");
  }
}

void apply_corruption(AliveCoefficients& coeffs, const std::string& spec, int) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::UsageError, "corruption must look like NAME:EPS");
  double eps = 0.0;
  try {
    std::size_t used = 0;
    eps = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::UsageError, "bad corruption size in '" + spec + "'");
  }
  corrupt(coeffs, spec.substr(0, colon), eps);
}

std::vector<Perturbation> standard_perturbations() {
  std::vector<Perturbation> out;
  for (double f : {0.5, 1.5}) out.push_back({f, 1.0, 1.0});
  for (double f : {0.9, 1.1}) out.push_back({1.0, f, 1.0});
  for (double f : {0.0, 2.0}) out.push_back({1.0, 1.0, f});
  return out;
}

namespace {

std::vector<double> samples_of(const PathBundle& bundle) {
  std::vector<double> s;
  if (bundle.antithetic) {
    for (std::size_t i = 0; i + 1 < bundle.paths.size(); i += 2)
      s.push_back(0.5 * (bundle.paths[i].utility + bundle.paths[i + 1].utility));
  } else {
    for (const auto& r : bundle.paths) s.push_back(r.utility);
  }
  return s;
}

double paired_std_error(const PathBundle& a, const PathBundle& b) {
  const auto sa = samples_of(a);
  const auto sb = samples_of(b);
  std::vector<double> d(sa.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = sb[k] - sa[k];
  const double n = static_cast<double>(d.size());
  const double mean = pairwise_sum(d) / n;
  for (double& v : d) v = (v - mean) * (v - mean);
  return std::sqrt(pairwise_sum(d) / (n - 1.0) / n);
}

}  // namespace

std::vector<DominanceRow> dominance_battery(const ModelParams& params, const PolicyOracle& optimal,
                                            const PathBundle& optimal_paths, const SimConfig& cfg,
                                            const std::vector<Perturbation>& perturbations) {
  const MCEstimate base = estimate_objective(optimal_paths);
  std::vector<DominanceRow> rows;
  for (const auto& q : perturbations) {
    const PathBundle paths = simulate(params, perturbed(optimal, q), cfg);
    DominanceRow row;
    row.perturbation = q;
    row.estimate = estimate_objective(paths);
    row.difference = row.estimate.mean - base.mean;
    row.combined_se = std::hypot(base.std_error, row.estimate.std_error);
    row.paired_se = paired_std_error(optimal_paths, paths);
    row.passed = row.difference <= 3.0 * row.combined_se;
    rows.push_back(row);
  }
  return rows;
}

bool MCValueReport::dominance_passed() const {
  return std::all_of(dominance.begin(), dominance.end(), [](const DominanceRow& r) { return r.passed; });
}

MCValueReport check_mc_value(const ModelParams& params, std::shared_ptr<const AliveCoefficients> coeffs,
                             const SimConfig& cfg, bool run_dominance) {
  MCValueReport rep;
  rep.closed_form = alive_value(0.0, params.x0, params.habit.h0, params.eta0, *coeffs, params);
  const PolicyOracle policy = optimal_policy(params, coeffs, cfg.dt);
  const PathBundle paths = simulate(params, policy, cfg);
  rep.estimate = estimate_objective(paths);
  rep.z_score = (rep.estimate.mean - rep.closed_form) / rep.estimate.std_error;
  rep.rel_std_error = rep.estimate.std_error / std::abs(rep.closed_form);
  rep.within_3se = std::abs(rep.z_score) <= 3.0;
  rep.min_effective_wealth = std::numeric_limits<double>::infinity();
  for (const auto& p : paths.paths) rep.min_effective_wealth = std::min(rep.min_effective_wealth, p.min_effective_wealth);
  if (run_dominance) rep.dominance = dominance_battery(params, policy, paths, cfg, standard_perturbations());
  return rep;
}

StepHalvingReport check_mc_step_halving(const ModelParams& params,
                                        std::shared_ptr<const AliveCoefficients> coeffs, const SimConfig& cfg) {
  StepHalvingReport rep;
  SimConfig fine = cfg;
  fine.dt = 0.5 * cfg.dt;
  rep.coarse = estimate_objective(simulate(params, optimal_policy(params, coeffs, cfg.dt), cfg));
  rep.fine = estimate_objective(simulate(params, optimal_policy(params, coeffs, fine.dt), fine));
  rep.difference = rep.fine.mean - rep.coarse.mean;
  rep.combined_se = std::hypot(rep.coarse.std_error, rep.fine.std_error);
  rep.passed = std::abs(rep.difference) < 2.0 * rep.combined_se;
  return rep;
}

void write_report_text(std::ostream& out, const ResidualReport& report) {
  out << std::setprecision(6);
  out << report.name << ": " << (report.passed() ? "PASS" : "FAIL") << "  max_rel=" << report.max_rel_residual
      << "  max_abs=" << report.max_abs_residual << "  threshold=" << report.threshold
      << "  points=" << report.n_points << '\n';
  for (const auto& p : report.worst_k)
    out << "    t=" << p.where.t << " x=" << p.where.x << " h=" << p.where.h << " state=" << p.where.state
        << " rel=" << p.rel_residual << " abs=" << p.abs_residual << '\n';
}

void write_reports_csv(std::ostream& out, const std::vector<ResidualReport>& reports) {
  out << "check,rank,t,x,h,state,abs_residual,rel_residual,threshold,passed\n" << std::setprecision(12);
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.worst_k.size(); ++k) {
      const auto& p = r.worst_k[k];
      out << '"' << r.name << "\"," << k << ',' << p.where.t << ',' << p.where.x << ',' << p.where.h << ','
          << p.where.state << ',' << p.abs_residual << ',' << p.rel_residual << ',' << r.threshold << ','
          << (r.passed() ? 1 : 0) << '\n';
    }
}

}  // namespace healthshock
