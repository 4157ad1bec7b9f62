#include "healthshock/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace healthshock {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Outgoing {
  int to;
  std::vector<double> prob;  // q_ij(t_k) dt per step
};

// Deterministic per-step quantities shared by all paths.
struct StepTables {
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> discount;
  std::vector<std::vector<double>> death_prob;  // [state][k] = lambda dt
  std::vector<std::vector<double>> lambda;      // [state][k]
  std::vector<std::vector<double>> income;      // [state][k]
  std::vector<std::vector<Outgoing>> outgoing;  // [state]
};

StepTables build_tables(const ModelParams& p, const SimConfig& cfg) {
  StepTables tab;
  const double T = p.horizon_T;
  const double ratio = T / cfg.dt;
  tab.steps = static_cast<std::size_t>(std::llround(ratio));
  if (tab.steps == 0 || std::abs(ratio - static_cast<double>(tab.steps)) > 1e-6 * ratio)
    throw Error(ErrorCode::InvalidParameter, "dt must divide the horizon into whole steps");
  tab.dt = T / static_cast<double>(tab.steps);
  const int n = p.n_states();
  const auto un = static_cast<std::size_t>(n);
  tab.t.resize(tab.steps + 1);
  tab.discount.resize(tab.steps + 1);
  tab.death_prob.assign(un, std::vector<double>(tab.steps + 1));
  tab.lambda.assign(un, std::vector<double>(tab.steps + 1));
  tab.income.assign(un, std::vector<double>(tab.steps + 1));
  tab.outgoing.assign(un, {});
  for (const auto& tr : p.states.transitions)
    tab.outgoing[static_cast<std::size_t>(tr.from)].push_back({tr.to, std::vector<double>(tab.steps + 1)});

  for (std::size_t k = 0; k <= tab.steps; ++k) {
    const double t = k == tab.steps ? T : tab.dt * static_cast<double>(k);
    tab.t[k] = t;
    tab.discount[k] = std::exp(-p.prefs.rho * t);
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double lam = p.hazard.lambda(t, i);
      tab.lambda[ui][k] = lam;
      tab.death_prob[ui][k] = lam * tab.dt;
      tab.income[ui][k] = p.income.y0 * std::exp(p.income.delta * t) / p.income.xi[ui];
      double exit = 0.0;
      for (auto& o : tab.outgoing[ui]) {
        o.prob[k] = p.states.intensity(t, i, o.to) * tab.dt;
        exit += o.prob[k];
      }
      if (tab.death_prob[ui][k] > 0.1 || exit > 0.1)
        throw Error(ErrorCode::StepTooCoarse,
                    "per-step death/transition probability exceeds 0.1 in state " + std::to_string(i) +
                        " at t=" + std::to_string(t) + "; reduce dt");
    }
  }
  return tab;
}

class PathRunner {
 public:
  PathRunner(const ModelParams& p, const PolicyOracle& policy, const SimConfig& cfg, const StepTables& tab,
             double penalty)
      : p_(p), policy_(policy), cfg_(cfg), tab_(tab), penalty_(penalty), power_(1.0 - p.prefs.gamma) {
    excess_return_ = p.market.mu - p.market.r;
    // Controls are frozen over a step, so the linear part r x integrates exactly.
    const double r = p.market.r;
    growth_ = std::exp(r * tab.dt);
    annuity_ = r == 0.0 ? tab.dt : std::expm1(r * tab.dt) / r;
    noise_scale_ = r == 0.0 ? std::sqrt(tab.dt) : std::sqrt(std::expm1(2.0 * r * tab.dt) / (2.0 * r));
    habit_decay_ = std::exp(-p.habit.beta * tab.dt);
  }

  PathRecord run(std::size_t index, std::vector<TrajectoryPoint>* trace) const {
    const std::size_t stream = cfg_.antithetic ? index / 2 : index;
    const double sign = cfg_.antithetic && index % 2 == 1 ? -1.0 : 1.0;
    std::mt19937_64 engine(splitmix64(cfg_.seed ^ splitmix64(stream)));
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> uniform;

    const double gamma = p_.prefs.gamma;
    const double dt = tab_.dt;
    PathRecord rec;
    rec.min_effective_wealth = policy_.effective_wealth ? std::numeric_limits<double>::infinity()
                                                        : std::numeric_limits<double>::quiet_NaN();
    double x = p_.x0;
    double h = p_.habit.h0;
    int state = p_.eta0;
    bool alive = true;
    double previous_u = 0.0;

    for (std::size_t k = 0; k <= tab_.steps; ++k) {
      const double t = tab_.t[k];
      const auto decision = alive ? policy_.decide_alive(t, x, h, state) : policy_.decide_dead(t, x, h);
      if (policy_.effective_wealth) {
        const double eff = decision && !std::isnan(decision->effective_wealth)
                               ? decision->effective_wealth
                               : policy_.effective_wealth(t, x, h, alive ? std::optional<int>(state) : std::nullopt);
        rec.min_effective_wealth = std::min(rec.min_effective_wealth, eff);
      }
      if (!decision || !(decision->c > h)) return inadmissible(rec, x, state, alive);

      const double weight = alive ? p_.prefs.k_a[static_cast<std::size_t>(state)] : p_.prefs.k_d;
      const double u = weight * tab_.discount[k] * power_(decision->c - h) / (1.0 - gamma);
      if (k > 0) rec.running += 0.5 * dt * (previous_u + u);
      previous_u = u;

      const double premium = alive ? decision->p.value_or(0.0) : 0.0;
      if (trace && (k % cfg_.record_stride == 0 || k == tab_.steps))
        trace->push_back({t, x, h, alive ? state : -1, decision->pi, decision->c, premium});
      if (k == tab_.steps) break;

      const double z = sign * normal(engine);
      const double draw = uniform(engine);
      const auto us = static_cast<std::size_t>(state);

      double inflow = decision->pi * excess_return_ - decision->c;
      if (alive) inflow += tab_.income[us][k] - premium;
      double x_next = x * growth_ + inflow * annuity_ + p_.market.sigma * decision->pi * noise_scale_ * z;
      const double c = decision->c;
      double h_next = p_.habit.beta == 0.0
                          ? h + p_.habit.alpha * c * dt
                          : c * p_.habit.alpha / p_.habit.beta + (h - c * p_.habit.alpha / p_.habit.beta) * habit_decay_;

      if (alive) {
        const double pd = tab_.death_prob[us][k];
        if (draw < pd) {
          x_next += premium / tab_.lambda[us][k];
          alive = false;
          rec.death_time = tab_.t[k + 1];
        } else {
          double acc = pd;
          for (const auto& o : tab_.outgoing[us]) {
            acc += o.prob[k];
            if (draw < acc) {
              state = o.to;
              ++rec.transitions;
              break;
            }
          }
        }
      }
      if (!std::isfinite(x_next) || !std::isfinite(h_next))
        throw Error(ErrorCode::PathBlowup, "non-finite state on path " + std::to_string(index) +
                                               " at t=" + std::to_string(tab_.t[k + 1]));
      x = x_next;
      h = h_next;
    }

    rec.final_state = alive ? state : -1;
    rec.terminal_wealth = x;
    if (!(x > 0.0)) return inadmissible(rec, x, state, alive);
    rec.terminal = (alive ? p_.prefs.omega_a[static_cast<std::size_t>(state)] : p_.prefs.omega_d) *
                   tab_.discount[tab_.steps] * power_(x) / (1.0 - gamma);
    rec.utility = rec.running + rec.terminal;
    return rec;
  }

 private:
  PathRecord inadmissible(PathRecord rec, double x, int state, bool alive) const {
    rec.inadmissible = true;
    rec.final_state = alive ? state : -1;
    rec.terminal_wealth = x;
    rec.terminal = 0.0;
    rec.utility = rec.running + penalty_;
    return rec;
  }

  const ModelParams& p_;
  const PolicyOracle& policy_;
  const SimConfig& cfg_;
  const StepTables& tab_;
  double penalty_;
  PowerLaw power_;
  double excess_return_ = 0.0;
  double growth_ = 1.0;
  double annuity_ = 0.0;
  double noise_scale_ = 0.0;
  double habit_decay_ = 0.0;
};

}  // namespace

PathBundle simulate(const ModelParams& params, const PolicyOracle& policy, const SimConfig& cfg) {
  params.validate();
  if (cfg.n_paths < 1) throw Error(ErrorCode::InvalidParameter, "n_paths must be >= 1");
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidParameter, "dt must be positive");
  if (cfg.antithetic && cfg.n_paths % 2 != 0)
    throw Error(ErrorCode::InvalidParameter, "antithetic sampling needs an even path count");
  if (cfg.record_stride == 0) throw Error(ErrorCode::InvalidParameter, "record_stride must be >= 1");
  if (!policy.decide_alive || !policy.decide_dead)
    throw Error(ErrorCode::InvalidParameter, "policy oracle is incomplete");

  const StepTables tab = build_tables(params, cfg);
  const double gamma = params.prefs.gamma;
  const double penalty = cfg.inadmissible_penalty.value_or(
      1e3 * params.prefs.omega_d * std::pow(std::max(params.x0, 1.0), 1.0 - gamma) / (1.0 - gamma));
  const PathRunner runner(params, policy, cfg, tab, penalty);

  PathBundle bundle;
  bundle.antithetic = cfg.antithetic;
  bundle.dt = tab.dt;
  bundle.paths.resize(cfg.n_paths);
  const std::size_t recorded = std::min(cfg.record_paths, cfg.n_paths);
  bundle.trajectories.resize(recorded);

  unsigned threads = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_paths));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < cfg.n_paths; i += threads)
        bundle.paths[i] = runner.run(i, i < recorded ? &bundle.trajectories[i] : nullptr);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  bundle.inadmissible = static_cast<std::size_t>(
      std::count_if(bundle.paths.begin(), bundle.paths.end(), [](const PathRecord& r) { return r.inadmissible; }));
  return bundle;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

MCEstimate estimate_objective(const PathBundle& bundle) {
  std::vector<double> samples;
  if (bundle.antithetic) {
    samples.reserve(bundle.paths.size() / 2);
    for (std::size_t i = 0; i + 1 < bundle.paths.size(); i += 2)
      samples.push_back(0.5 * (bundle.paths[i].utility + bundle.paths[i + 1].utility));
  } else {
    samples.reserve(bundle.paths.size());
    for (const auto& r : bundle.paths) samples.push_back(r.utility);
  }
  if (samples.size() < 2)
    throw Error(ErrorCode::EmptyBundle, "at least two independent samples are needed");

  const double n = static_cast<double>(samples.size());
  const double mean = pairwise_sum(samples) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
  const double variance = pairwise_sum(sq) / (n - 1.0);

  MCEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(variance / n);
  est.n_effective = samples.size();
  est.n_paths = bundle.paths.size();
  est.inadmissible = bundle.inadmissible;
  return est;
}

void write_paths_csv(std::ostream& out, const PathBundle& bundle) {
  out << "path,t,X,h,eta,pi,c,p\n" << std::setprecision(12);
  for (std::size_t i = 0; i < bundle.trajectories.size(); ++i)
    for (const auto& pt : bundle.trajectories[i])
      out << i << ',' << pt.t << ',' << pt.x << ',' << pt.h << ',' << pt.eta << ',' << pt.pi << ',' << pt.c
          << ',' << pt.p << '\n';
}

}  // namespace healthshock
