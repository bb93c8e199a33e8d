#include "hetnet/powerctl.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace hetnet {

namespace {

constexpr double kLn2 = std::numbers::ln2;
// Rate target margin inside the ALM so that the returned point clears R_min
// despite the ALM's feasibility tolerance.
constexpr double kQosMargin = 1e-4;

// Active small-cell tuples of an assignment with the coupling gains among
// them. cross[t * T + u] is the gain from tuple u's user into tuple t's BS
// when u interferes with t.
struct ActiveSet {
  std::vector<Tuple> tuples;
  std::vector<double> own;
  std::vector<double> cross;
  std::vector<double> macro;  // gain towards the macro BS
  double noise = 1.0;

  ActiveSet(const NetworkInstance& inst, const Assignment& asg) {
    for (const Tuple& t : asg.active_tuples()) {
      if (t.bs != kMacroBs) tuples.push_back(t);
    }
    const std::size_t T = tuples.size();
    own.resize(T);
    macro.resize(T);
    cross.assign(T * T, 0.0);
    noise = inst.noise_power();
    for (std::size_t t = 0; t < T; ++t) {
      const Tuple& a = tuples[t];
      own[t] = inst.gain(a.user, a.bs, a.subchannel, a.antenna);
      macro[t] = inst.macro_gain(a.user, a.subchannel, a.antenna);
      for (std::size_t u = 0; u < T; ++u) {
        const Tuple& b = tuples[u];
        if (b.subchannel != a.subchannel || b.bs == a.bs || b.user == a.user) {
          continue;
        }
        cross[t * T + u] = inst.gain(b.user, a.bs, a.subchannel, b.antenna);
      }
    }
  }

  std::size_t size() const { return tuples.size(); }
};

// Rates of an ActiveSet at given powers, cached on the last argument.
class RateEvaluator {
 public:
  explicit RateEvaluator(std::shared_ptr<const ActiveSet> set,
                         std::vector<double> scale)
      : set_(std::move(set)), scale_(std::move(scale)) {}

  const std::vector<double>& scale() const { return scale_; }

  void at(std::span<const double> y) {
    if (valid_ && std::equal(y.begin(), y.end(), y_.begin(), y_.end())) return;
    const std::size_t T = set_->size();
    y_.assign(y.begin(), y.end());
    p_.resize(T);
    denom_.resize(T);
    total_.resize(T);
    rate_.resize(T);
    for (std::size_t t = 0; t < T; ++t) p_[t] = scale_[t] * y[t];
    for (std::size_t t = 0; t < T; ++t) {
      double d = set_->noise;
      for (std::size_t u = 0; u < T; ++u) d += set_->cross[t * T + u] * p_[u];
      denom_[t] = d;
      total_[t] = d + p_[t] * set_->own[t];
      rate_[t] = std::log2(total_[t] / d);
    }
    valid_ = true;
  }

  double rate(std::size_t t) const { return rate_[t]; }
  double power(std::size_t t) const { return p_[t]; }

  // out += sign * d(sum_{t in terms} R_t)/dy
  void add_rate_gradient(const std::vector<std::size_t>& terms, double sign,
                         std::span<double> out) const {
    const std::size_t T = set_->size();
    for (std::size_t t : terms) {
      out[t] += sign * scale_[t] * set_->own[t] / (total_[t] * kLn2);
      const double coupling = (1.0 / total_[t] - 1.0 / denom_[t]) / kLn2;
      for (std::size_t u = 0; u < T; ++u) {
        const double c = set_->cross[t * T + u];
        if (c != 0.0) out[u] += sign * scale_[u] * c * coupling;
      }
    }
  }

 private:
  std::shared_ptr<const ActiveSet> set_;
  std::vector<double> scale_;
  bool valid_ = false;
  std::vector<double> y_, p_, denom_, total_, rate_;
};

struct PowerProblem {
  alm::ConstrainedProblem problem;
  std::vector<std::size_t> c1_users;
  std::vector<std::size_t> c2_subchannels;
  std::vector<std::size_t> c3_users;
};

// Variables y with p_t = scale_t * y_t.
PowerProblem build_power_problem(const NetworkInstance& inst,
                                 std::shared_ptr<const ActiveSet> set,
                                 std::vector<double> scale,
                                 const std::vector<std::size_t>& qos_users,
                                 double qos_target, const SolverConfig& cfg) {
  const std::size_t T = set->size();
  auto eval = std::make_shared<RateEvaluator>(set, std::move(scale));
  PowerProblem out;
  auto& prob = out.problem;
  prob.dimension = T;

  std::vector<std::size_t> all(T);
  for (std::size_t t = 0; t < T; ++t) all[t] = t;
  prob.objective.value = [eval, T](std::span<const double> y) {
    eval->at(y);
    double v = 0.0;
    for (std::size_t t = 0; t < T; ++t) v += eval->rate(t);
    return v;
  };
  prob.objective.gradient = [eval, all](std::span<const double> y,
                                        std::span<double> g) {
    eval->at(y);
    std::fill(g.begin(), g.end(), 0.0);
    eval->add_rate_gradient(all, 1.0, g);
  };

  // Linear constraints sum_t w_t y_t - bound.
  auto add_linear = [&prob](std::vector<std::pair<std::size_t, double>> w,
                            double bound) {
    alm::Function f;
    f.value = [w, bound](std::span<const double> y) {
      double v = -bound;
      for (const auto& [t, c] : w) v += c * y[t];
      return v;
    };
    f.gradient = [w](std::span<const double>, std::span<double> g) {
      std::fill(g.begin(), g.end(), 0.0);
      for (const auto& [t, c] : w) g[t] += c;
    };
    prob.inequalities.push_back(std::move(f));
  };

  std::vector<std::vector<std::size_t>> by_user(inst.num_users());
  for (std::size_t t = 0; t < T; ++t) by_user[set->tuples[t].user].push_back(t);

  const double c1_scale = cfg.p_max > 0.0 ? cfg.p_max : 1.0;
  for (std::size_t i = 0; i < inst.num_users(); ++i) {
    if (by_user[i].empty()) continue;
    std::vector<std::pair<std::size_t, double>> w;
    for (std::size_t t : by_user[i]) w.emplace_back(t, eval->scale()[t] / c1_scale);
    add_linear(std::move(w), cfg.p_max / c1_scale);
    out.c1_users.push_back(i);
  }

  const double c2_scale = cfg.i_th > 0.0 ? cfg.i_th : inst.noise_power();
  for (std::size_t m = 0; m < inst.num_subchannels(); ++m) {
    std::vector<std::pair<std::size_t, double>> w;
    for (std::size_t t = 0; t < T; ++t) {
      if (set->tuples[t].subchannel != m) continue;
      w.emplace_back(t, eval->scale()[t] * set->macro[t] / c2_scale);
    }
    if (w.empty()) continue;
    add_linear(std::move(w), cfg.i_th / c2_scale);
    out.c2_subchannels.push_back(m);
  }

  for (std::size_t i : qos_users) {
    if (by_user[i].empty()) continue;
    const auto terms = by_user[i];
    alm::Function f;
    f.value = [eval, terms, qos_target](std::span<const double> y) {
      eval->at(y);
      double r = 0.0;
      for (std::size_t t : terms) r += eval->rate(t);
      return qos_target - r;
    };
    f.gradient = [eval, terms](std::span<const double> y, std::span<double> g) {
      eval->at(y);
      std::fill(g.begin(), g.end(), 0.0);
      eval->add_rate_gradient(terms, -1.0, g);
    };
    prob.inequalities.push_back(std::move(f));
    out.c3_users.push_back(i);
  }
  return out;
}

alm::MultiplierState to_state(const PowerProblem& pp, const PowerMultipliers& pm) {
  alm::MultiplierState ms;
  ms.gamma = pm.psi;
  auto get = [](const std::vector<double>& v, std::size_t k) {
    return k < v.size() ? v[k] : 0.0;
  };
  for (std::size_t i : pp.c1_users) ms.lambda.push_back(get(pm.lambda, i));
  for (std::size_t m : pp.c2_subchannels) ms.lambda.push_back(get(pm.theta, m));
  for (std::size_t i : pp.c3_users) ms.lambda.push_back(get(pm.phi, i));
  return ms;
}

PowerMultipliers from_state(const NetworkInstance& inst, const PowerProblem& pp,
                            const alm::MultiplierState& ms) {
  PowerMultipliers pm = PowerMultipliers::zeros(inst, ms.gamma);
  std::size_t j = 0;
  for (std::size_t i : pp.c1_users) pm.lambda[i] = ms.lambda[j++];
  for (std::size_t m : pp.c2_subchannels) pm.theta[m] = ms.lambda[j++];
  for (std::size_t i : pp.c3_users) pm.phi[i] = ms.lambda[j++];
  return pm;
}

std::vector<std::size_t> scheduled_users(const ActiveSet& set) {
  std::vector<std::size_t> users;
  for (const Tuple& t : set.tuples) users.push_back(t.user);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return users;
}

}  // namespace

PowerMultipliers PowerMultipliers::zeros(const NetworkInstance& inst,
                                         double psi) {
  PowerMultipliers pm;
  pm.lambda.assign(inst.num_users(), 0.0);
  pm.theta.assign(inst.num_subchannels(), 0.0);
  pm.phi.assign(inst.num_users(), 0.0);
  pm.psi = psi;
  return pm;
}

double tuple_power_cap(const NetworkInstance& inst, const Tuple& t,
                       const SolverConfig& cfg) {
  const double h0 = inst.macro_gain(t.user, t.subchannel, t.antenna);
  if (h0 <= 0.0) return cfg.p_max;
  return std::min(cfg.p_max, cfg.i_th / h0);
}

ActiveRates active_rate_and_grad(const NetworkInstance& inst,
                                 const Assignment& asg,
                                 const PowerAllocation& p) {
  auto set = std::make_shared<const ActiveSet>(inst, asg);
  const std::size_t T = set->size();
  RateEvaluator eval(set, std::vector<double>(T, 1.0));
  std::vector<double> watts(T);
  for (std::size_t t = 0; t < T; ++t) watts[t] = p[set->tuples[t]];
  eval.at(watts);
  ActiveRates out;
  out.tuples = set->tuples;
  out.rates.resize(T);
  for (std::size_t t = 0; t < T; ++t) out.rates[t] = eval.rate(t);
  out.gradient.assign(T, 0.0);
  std::vector<std::size_t> all(T);
  for (std::size_t t = 0; t < T; ++t) all[t] = t;
  eval.add_rate_gradient(all, 1.0, out.gradient);
  return out;
}

double power_augmented_value(const NetworkInstance& inst, const Assignment& asg,
                             const PowerAllocation& p,
                             const PowerMultipliers& pm,
                             const SolverConfig& cfg) {
  auto set = std::make_shared<const ActiveSet>(inst, asg);
  const std::size_t T = set->size();
  const auto qos = cfg.r_min > 0.0 ? scheduled_users(*set)
                                   : std::vector<std::size_t>{};
  const auto pp = build_power_problem(inst, set, std::vector<double>(T, 1.0),
                                      qos, cfg.r_min, cfg);
  std::vector<double> watts(T);
  for (std::size_t t = 0; t < T; ++t) watts[t] = p[set->tuples[t]];
  return alm::augmented_value(pp.problem, watts, to_state(pp, pm));
}

std::vector<double> power_augmented_gradient(const NetworkInstance& inst,
                                             const Assignment& asg,
                                             const PowerAllocation& p,
                                             const PowerMultipliers& pm,
                                             const SolverConfig& cfg) {
  auto set = std::make_shared<const ActiveSet>(inst, asg);
  const std::size_t T = set->size();
  const auto qos = cfg.r_min > 0.0 ? scheduled_users(*set)
                                   : std::vector<std::size_t>{};
  const auto pp = build_power_problem(inst, set, std::vector<double>(T, 1.0),
                                      qos, cfg.r_min, cfg);
  std::vector<double> watts(T);
  for (std::size_t t = 0; t < T; ++t) watts[t] = p[set->tuples[t]];
  return alm::augmented_gradient(pp.problem, watts, to_state(pp, pm));
}

PowerControlResult alm_power_control(const NetworkInstance& inst,
                                     const Assignment& asg,
                                     const PowerAllocation& p0,
                                     const SolverConfig& cfg) {
  PowerControlResult result;
  result.power = PowerAllocation(inst);
  result.multipliers = PowerMultipliers::zeros(inst, cfg.psi0);
  auto set = std::make_shared<const ActiveSet>(inst, asg);
  const std::size_t T = set->size();
  if (T == 0) {
    result.converged = true;
    return result;
  }

  std::vector<double> cap(T);
  for (std::size_t t = 0; t < T; ++t) cap[t] = tuple_power_cap(inst, set->tuples[t], cfg);

  // Users that cannot reach R_min even alone at their cap carry no C3 term.
  std::vector<std::size_t> qos;
  if (cfg.r_min > 0.0) {
    for (std::size_t i : scheduled_users(*set)) {
      double best = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        if (set->tuples[t].user != i) continue;
        best += std::log2(1.0 + cap[t] * set->own[t] / set->noise);
      }
      if (best < cfg.r_min) {
        result.qos_users_infeasible.push_back(i);
      } else {
        qos.push_back(i);
      }
    }
  }

  const auto pp =
      build_power_problem(inst, set, cap, qos, cfg.r_min + kQosMargin, cfg);
  auto prob = pp.problem;
  prob.lower.assign(T, 0.0);
  prob.upper.assign(T, 1.0);

  std::vector<double> y0(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    y0[t] = cap[t] > 0.0 ? std::clamp(p0[set->tuples[t]] / cap[t], 0.0, 1.0) : 0.0;
  }

  alm::Schedule schedule;
  schedule.growth = 2.0;
  schedule.gamma_cap = cfg.psi_cap;
  schedule.max_iter = cfg.alm_max_iter;
  schedule.feasibility_tol = 1e-6;
  schedule.step_tol = cfg.eps_power;
  alm::AscentOptions inner;
  inner.max_iter = cfg.inner_max_iter;
  inner.step_tol = 1e-9;
  const auto solved = alm::alm_solve(
      prob, y0, alm::MultiplierState::zeros(prob, cfg.psi0),
      alm::make_gradient_maximizer(inner), schedule);

  std::vector<double> p(T);
  for (std::size_t t = 0; t < T; ++t) p[t] = cap[t] * solved.z[t];

  // Remove residual C1/C2 excess by uniform rescaling.
  for (std::size_t i : pp.c1_users) {
    double load = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      if (set->tuples[t].user == i) load += p[t];
    if (load > cfg.p_max) {
      const double f = load > 0.0 ? cfg.p_max / load : 0.0;
      for (std::size_t t = 0; t < T; ++t)
        if (set->tuples[t].user == i) p[t] *= f;
    }
  }
  for (std::size_t m : pp.c2_subchannels) {
    double load = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      if (set->tuples[t].subchannel == m) load += p[t] * set->macro[t];
    if (load > cfg.i_th) {
      const double f = cfg.i_th / load;
      for (std::size_t t = 0; t < T; ++t)
        if (set->tuples[t].subchannel == m) p[t] *= f;
    }
  }
  for (std::size_t t = 0; t < T; ++t) result.power[set->tuples[t]] = p[t];

  result.trace = solved.trace;
  result.alm_iterations = static_cast<int>(solved.trace.size());
  result.converged = solved.converged;
  result.multipliers = from_state(inst, pp, solved.multipliers);

  if (cfg.r_min > 0.0) {
    const auto rates = user_rates(inst, asg, result.power);
    for (std::size_t i : scheduled_users(*set)) {
      result.c3_residual = std::max(result.c3_residual, cfg.r_min - rates[i]);
    }
  }
  result.qos_infeasible =
      !result.qos_users_infeasible.empty() || result.c3_residual > 1e-9;
  return result;
}

}  // namespace hetnet
