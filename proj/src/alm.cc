#include "hetnet/alm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hetnet::alm {

void ConstrainedProblem::validate() const {
  if (!objective.value || !objective.gradient) {
    throw std::invalid_argument("objective needs value and gradient");
  }
  for (const auto* set : {&inequalities, &equalities}) {
    for (const auto& fn : *set) {
      if (!fn.value || !fn.gradient) {
        throw std::invalid_argument("constraint needs value and gradient");
      }
    }
  }
  if (!lower.empty() && lower.size() != dimension) {
    throw std::invalid_argument("lower bound dimension mismatch");
  }
  if (!upper.empty() && upper.size() != dimension) {
    throw std::invalid_argument("upper bound dimension mismatch");
  }
}

Vector ConstrainedProblem::project(Vector z) const {
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!lower.empty()) z[k] = std::max(z[k], lower[k]);
    if (!upper.empty()) z[k] = std::min(z[k], upper[k]);
  }
  return z;
}

MultiplierState MultiplierState::zeros(const ConstrainedProblem& prob,
                                       double gamma) {
  MultiplierState ms;
  ms.lambda.assign(prob.inequalities.size(), 0.0);
  ms.eta.assign(prob.equalities.size(), 0.0);
  ms.gamma = gamma;
  return ms;
}

double inequality_penalty(double lambda, double gamma, double g) {
  const double t = std::max(0.0, lambda + gamma * g);
  return (t * t - lambda * lambda) / (2.0 * gamma);
}

double augmented_value(const ConstrainedProblem& prob,
                       std::span<const double> z, const MultiplierState& ms) {
  double value = prob.objective.value(z);
  for (std::size_t i = 0; i < prob.equalities.size(); ++i) {
    const double h = prob.equalities[i].value(z);
    value -= ms.eta[i] * h + 0.5 * ms.gamma * h * h;
  }
  for (std::size_t j = 0; j < prob.inequalities.size(); ++j) {
    value -= inequality_penalty(ms.lambda[j], ms.gamma,
                                prob.inequalities[j].value(z));
  }
  return value;
}

Vector augmented_gradient(const ConstrainedProblem& prob,
                          std::span<const double> z,
                          const MultiplierState& ms) {
  Vector grad(z.size(), 0.0);
  Vector work(z.size(), 0.0);
  prob.objective.gradient(z, grad);
  for (std::size_t i = 0; i < prob.equalities.size(); ++i) {
    const double h = prob.equalities[i].value(z);
    const double w = ms.eta[i] + ms.gamma * h;
    prob.equalities[i].gradient(z, work);
    for (std::size_t k = 0; k < z.size(); ++k) grad[k] -= w * work[k];
  }
  for (std::size_t j = 0; j < prob.inequalities.size(); ++j) {
    const double w = inequality_penalty_slope(ms.lambda[j], ms.gamma,
                                              prob.inequalities[j].value(z));
    if (w == 0.0) continue;
    prob.inequalities[j].gradient(z, work);
    for (std::size_t k = 0; k < z.size(); ++k) grad[k] -= w * work[k];
  }
  return grad;
}

MultiplierState update_multipliers(const MultiplierState& ms,
                                   std::span<const double> inequality_values,
                                   std::span<const double> equality_values) {
  if (inequality_values.size() != ms.lambda.size() ||
      equality_values.size() != ms.eta.size()) {
    throw std::invalid_argument("constraint values do not match multipliers");
  }
  MultiplierState next = ms;
  for (std::size_t j = 0; j < ms.lambda.size(); ++j) {
    next.lambda[j] = std::max(0.0, ms.lambda[j] + ms.gamma * inequality_values[j]);
  }
  for (std::size_t i = 0; i < ms.eta.size(); ++i) {
    next.eta[i] = ms.eta[i] + ms.gamma * equality_values[i];
  }
  return next;
}

double max_violation(std::span<const double> inequality_values,
                     std::span<const double> equality_values) {
  double v = 0.0;
  for (double g : inequality_values) v = std::max(v, g);
  for (double h : equality_values) v = std::max(v, std::abs(h));
  return v;
}

Result alm_solve(const ConstrainedProblem& prob, const Vector& z0,
                 const MultiplierState& ms0, const InnerMaximizer& inner,
                 const Schedule& schedule) {
  prob.validate();
  if (z0.size() != prob.dimension) {
    throw std::invalid_argument("starting point dimension mismatch");
  }
  Result result;
  Vector z = prob.project(z0);
  MultiplierState ms = ms0;
  if (ms.lambda.size() != prob.inequalities.size()) {
    ms.lambda.assign(prob.inequalities.size(), 0.0);
  }
  if (ms.eta.size() != prob.equalities.size()) {
    ms.eta.assign(prob.equalities.size(), 0.0);
  }
  const bool unconstrained = prob.inequalities.empty() && prob.equalities.empty();

  Vector best_z = z;
  MultiplierState best_ms = ms;
  double best_violation = std::numeric_limits<double>::infinity();
  double best_objective = -std::numeric_limits<double>::infinity();
  auto better = [&](double violation, double objective) {
    const bool feasible = violation <= schedule.feasibility_tol;
    const bool best_feasible = best_violation <= schedule.feasibility_tol;
    if (feasible != best_feasible) return feasible;
    if (feasible) return objective > best_objective;
    return violation < best_violation;
  };

  Vector g(prob.inequalities.size());
  Vector h(prob.equalities.size());
  for (int n = 1; n <= schedule.max_iter; ++n) {
    Vector next = prob.project(inner(prob, ms, z));
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = prob.inequalities[j].value(next);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = prob.equalities[i].value(next);

    double step = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      step = std::max(step, std::abs(next[k] - z[k]));
    }
    const double violation = max_violation(g, h);
    const double objective = prob.objective.value(next);
    result.trace.push_back({n, objective, augmented_value(prob, next, ms),
                            violation, step, ms.gamma});

    ms = update_multipliers(ms, g, h);
    z = std::move(next);
    if (better(violation, objective)) {
      best_z = z;
      best_ms = ms;
      best_violation = violation;
      best_objective = objective;
    }
    if (unconstrained ||
        (violation <= schedule.feasibility_tol && step <= schedule.step_tol)) {
      result.z = z;
      result.multipliers = ms;
      result.converged = true;
      return result;
    }
    ms.gamma = std::min(ms.gamma * schedule.growth, schedule.gamma_cap);
  }
  result.z = best_z;
  result.multipliers = best_ms;
  result.converged = false;
  return result;
}

// ---------------------------------------------------------------------------

AscentResult projected_gradient_ascent(
    const std::function<double(std::span<const double>)>& value,
    const std::function<void(std::span<const double>, std::span<double>)>&
        gradient,
    const Vector& lower, const Vector& upper, Vector z0,
    const AscentOptions& options) {
  const std::size_t n = z0.size();
  auto project = [&](Vector& v) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!lower.empty()) v[k] = std::max(v[k], lower[k]);
      if (!upper.empty()) v[k] = std::min(v[k], upper[k]);
    }
  };

  AscentResult out;
  Vector z = std::move(z0);
  project(z);
  double f = value(z);
  Vector grad(n, 0.0);
  gradient(z, grad);
  out.evaluations = 1;
  if (options.record_values) out.values.push_back(f);

  auto inf_norm = [](const Vector& v) {
    double r = 0.0;
    for (double e : v) r = std::max(r, std::abs(e));
    return r;
  };

  double step = options.initial_step;
  if (!(step > 0.0)) {
    const double gn = inf_norm(grad);
    step = gn > 0.0 ? 1.0 / gn : 1.0;
  }
  constexpr double kMinStep = 1e-30;
  constexpr double kMaxStep = 1e30;

  Vector trial(n), trial_grad(n);
  for (int k = 0; k < options.max_iter; ++k) {
    out.iterations = k + 1;
    double t = step;
    bool accepted = false;
    double f_trial = f;
    while (t >= kMinStep) {
      for (std::size_t q = 0; q < n; ++q) trial[q] = z[q] + t * grad[q];
      project(trial);
      double slope = 0.0;
      for (std::size_t q = 0; q < n; ++q) slope += grad[q] * (trial[q] - z[q]);
      f_trial = value(trial);
      ++out.evaluations;
      if (slope <= 0.0) break;  // projected gradient vanished
      if (f_trial >= f + options.armijo_slope * slope) {
        accepted = true;
        break;
      }
      t *= options.shrink;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }

    gradient(trial, trial_grad);
    double ss = 0.0, sy = 0.0, dz = 0.0, zn = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double s = trial[q] - z[q];
      const double y = trial_grad[q] - grad[q];
      ss += s * s;
      sy += s * y;
      dz = std::max(dz, std::abs(s));
      zn = std::max(zn, std::abs(trial[q]));
    }
    const double df = f_trial - f;
    z.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    if (options.record_values) out.values.push_back(f);

    step = sy < 0.0 ? ss / -sy : kMaxStep;
    step = std::clamp(step, kMinStep, kMaxStep);

    if (dz <= options.step_tol * (1.0 + zn) ||
        std::abs(df) <= 1e-15 * (1.0 + std::abs(f))) {
      out.converged = true;
      break;
    }
  }
  out.z = std::move(z);
  out.value = f;
  return out;
}

InnerMaximizer make_gradient_maximizer(const AscentOptions& options) {
  return [options](const ConstrainedProblem& prob, const MultiplierState& ms,
                   const Vector& warm) {
    auto value = [&](std::span<const double> z) {
      return augmented_value(prob, z, ms);
    };
    auto grad = [&](std::span<const double> z, std::span<double> out) {
      const Vector g = augmented_gradient(prob, z, ms);
      std::copy(g.begin(), g.end(), out.begin());
    };
    return projected_gradient_ascent(value, grad, prob.lower, prob.upper, warm,
                                     options)
        .z;
  };
}

}  // namespace hetnet::alm
