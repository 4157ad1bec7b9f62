#include "healthshock/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace healthshock {

namespace {

// Everything the affine feedback rule needs at one (t, state).
struct AliveRow {
  double A, M_y, M_B, kappa, phi, lambda, B;
};
struct DeadRow {
  double B, kappa;
};

class OptimalRule {
 public:
  OptimalRule(const ModelParams& params, std::shared_ptr<const AliveCoefficients> coeffs, double grid_dt)
      : params_(params), coeffs_(std::move(coeffs)), dt_(grid_dt) {
    merton_ = params_.market.merton_fraction(params_.prefs.gamma);
    if (dt_ <= 0.0) return;
    const auto steps = static_cast<std::size_t>(std::llround(params_.horizon_T / dt_));
    const int n = params_.n_states();
    alive_.resize((steps + 1) * static_cast<std::size_t>(n));
    dead_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = std::min(dt_ * static_cast<double>(k), params_.horizon_T);
      for (int i = 0; i < n; ++i) alive_[k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = alive_row(t, i);
      dead_[k] = dead_row(t);
    }
  }

  std::optional<PolicyDecision> alive(double t, double x, double h, int state) const {
    const AliveRow row = lookup_alive(t, state);
    const double hd = coeffs_->h_d_ref.value_or(h);
    const double eff = x + row.M_y - hd * row.M_B + h * row.A;
    if (!(eff > kWealthFloor)) return std::nullopt;
    PolicyDecision d;
    d.pi = merton_ * eff;
    d.c = h + row.kappa * eff;
    d.p = row.lambda * (hd * row.B - x + row.phi * eff);
    d.effective_wealth = eff;
    return d;
  }

  std::optional<PolicyDecision> dead(double t, double x, double h) const {
    const DeadRow row = lookup_dead(t);
    const double eff = x - h * row.B;
    if (!(eff > kWealthFloor)) return std::nullopt;
    PolicyDecision d;
    d.pi = merton_ * eff;
    d.c = h + row.kappa * eff;
    d.effective_wealth = eff;
    return d;
  }

  double effective_wealth(double t, double x, double h, std::optional<int> state) const {
    if (!state) return x - h * lookup_dead(t).B;
    const AliveRow row = lookup_alive(t, *state);
    const double hd = coeffs_->h_d_ref.value_or(h);
    return x + row.M_y - hd * row.M_B + h * row.A;
  }

 private:
  bool on_grid(double t, std::size_t& k) const {
    if (dt_ <= 0.0) return false;
    const double u = t / dt_;
    if (!(u >= -0.5) || u + 0.5 >= static_cast<double>(dead_.size())) return false;
    k = static_cast<std::size_t>(u + 0.5);  // std::round is a libm call on the hot path
    return std::abs(u - static_cast<double>(k)) <= 1e-9;
  }

  AliveRow lookup_alive(double t, int state) const {
    std::size_t k = 0;
    if (on_grid(t, k))
      return alive_[k * static_cast<std::size_t>(params_.n_states()) + static_cast<std::size_t>(state)];
    return alive_row(t, state);
  }
  DeadRow lookup_dead(double t) const {
    std::size_t k = 0;
    if (on_grid(t, k)) return dead_[k];
    return dead_row(t);
  }

  AliveRow alive_row(double t, int state) const {
    const auto& sc = coeffs_->at(state);
    const double inv_gamma = 1.0 / params_.prefs.gamma;
    const double surv = coeffs_->survival(t, state);
    const double A = sc.A.value(t);
    const double G = sc.G.value(t);
    AliveRow row{};
    row.A = A;
    row.M_y = sc.M_y.value(t);
    row.M_B = sc.M_B.value(t);
    row.kappa = std::pow(1.0 - params_.habit.alpha * A, -inv_gamma) *
                std::pow(params_.prefs.k_a[static_cast<std::size_t>(state)] * surv *
                             std::exp(-params_.prefs.rho * t),
                         inv_gamma) /
                G;
    row.phi = std::pow(surv, inv_gamma) * coeffs_->dead.g.value(t) / G;
    row.lambda = params_.hazard.lambda(t, state);
    row.B = coeffs_->dead.B(t);
    return row;
  }

  DeadRow dead_row(double t) const {
    const double inv_gamma = 1.0 / params_.prefs.gamma;
    const double B = coeffs_->dead.B(t);
    return {B, std::pow(1.0 + params_.habit.alpha * B, -inv_gamma) *
                   std::pow(params_.prefs.k_d * std::exp(-params_.prefs.rho * t), inv_gamma) /
                   coeffs_->dead.g.value(t)};
  }

  ModelParams params_;
  std::shared_ptr<const AliveCoefficients> coeffs_;
  double dt_;
  double merton_ = 0.0;
  std::vector<AliveRow> alive_;
  std::vector<DeadRow> dead_;
};

}  // namespace

PolicyOracle optimal_policy(const ModelParams& params, std::shared_ptr<const AliveCoefficients> coeffs,
                            double grid_dt) {
  auto rule = std::make_shared<const OptimalRule>(params, std::move(coeffs), grid_dt);
  PolicyOracle oracle;
  oracle.decide_alive = [rule](double t, double x, double h, int s) { return rule->alive(t, x, h, s); };
  oracle.decide_dead = [rule](double t, double x, double h) { return rule->dead(t, x, h); };
  oracle.effective_wealth = [rule](double t, double x, double h, std::optional<int> s) {
    return rule->effective_wealth(t, x, h, s);
  };
  return oracle;
}

std::string Perturbation::label() const {
  if (identity()) return "optimal";
  std::ostringstream out;
  const char* sep = "";
  if (merton != 1.0) { out << sep << "merton:" << merton; sep = "+"; }
  if (consumption != 1.0) { out << sep << "consumption:" << consumption; sep = "+"; }
  if (premium != 1.0) out << sep << "premium:" << premium;
  return out.str();
}

Perturbation parse_perturbation(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::UsageError, "perturbation must look like NAME:FACTOR, got '" + spec + "'");
  const std::string name = spec.substr(0, colon);
  double factor = 0.0;
  try {
    std::size_t used = 0;
    factor = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::UsageError, "bad perturbation factor in '" + spec + "'");
  }
  if (!(factor >= 0.0) || !std::isfinite(factor))
    throw Error(ErrorCode::UsageError, "perturbation factor must be finite and >= 0");
  Perturbation p;
  if (name == "merton") p.merton = factor;
  else if (name == "consumption") p.consumption = factor;
  else if (name == "premium") p.premium = factor;
  else throw Error(ErrorCode::UsageError, "unknown perturbation '" + name + "' (merton|consumption|premium)");
  return p;
}

PolicyOracle perturbed(PolicyOracle base, const Perturbation& q) {
  if (q.identity()) return base;
  PolicyOracle out = base;
  out.decide_alive = [inner = base.decide_alive, q](double t, double x, double h, int s) {
    auto d = inner(t, x, h, s);
    if (d) {
      d->pi *= q.merton;
      d->c = h + q.consumption * (d->c - h);
      if (d->p) *d->p *= q.premium;
    }
    return d;
  };
  out.decide_dead = [inner = base.decide_dead, q](double t, double x, double h) {
    auto d = inner(t, x, h);
    if (d) {
      d->pi *= q.merton;
      d->c = h + q.consumption * (d->c - h);
    }
    return d;
  };
  return out;
}

}  // namespace healthshock
