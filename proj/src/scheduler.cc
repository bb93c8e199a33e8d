#include "hetnet/scheduler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "hetnet/matching.h"

namespace hetnet {

namespace {

double positive(double v) { return v > 0.0 ? v : 0.0; }

std::size_t argmax(const double* v, std::size_t n, std::size_t stride = 1) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (v[k * stride] > v[best * stride]) best = k;
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rate coefficients and the penalized objective

double RateCoefficients::max() const {
  double best = 0.0;
  for (double r : rbar.data()) best = std::max(best, r);
  return best;
}

RateCoefficients rate_coefficients(const NetworkInstance& inst,
                                   const Assignment& prev_asg,
                                   const PowerAllocation& prev_p) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  RateCoefficients rc{Tensor4({I, B, M, A})};
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) {
        const double denom =
            inst.noise_power() + interference(inst, prev_asg, prev_p, b, m, i);
        for (std::size_t a = 0; a < A; ++a) {
          rc.rbar(i, b, m, a) =
              std::log2(1.0 + prev_p(i, b, m, a) * inst.gain(i, b, m, a) / denom);
        }
      }
  return rc;
}

double penalized_objective(const Assignment& z, const RateCoefficients& rc,
                           double mu_s, double mu_x) {
  const std::size_t I = z.num_users();
  const std::size_t B = z.num_bs();
  const std::size_t M = z.num_subchannels();
  const std::size_t A = z.num_antennas();
  double value = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) {
        const double s = z.s(i, b, m);
        for (std::size_t a = 0; a < A; ++a) {
          value += rc.rbar(i, b, m, a) * z.x(i, m, a) * s;
        }
      }
  for (double s : z.s_tensor().data()) value -= mu_s * (s - s * s);
  for (double x : z.x_tensor().data()) value -= mu_x * (x - x * x);
  return value;
}

// ---------------------------------------------------------------------------
// Layout

VariableLayout::VariableLayout(const NetworkInstance& inst)
    : I_(inst.num_users()),
      B_(inst.num_bs()),
      K_(inst.num_smallcells() * inst.num_subchannels()),
      M_(inst.num_subchannels()),
      A_(inst.num_antennas()) {}

std::vector<double> VariableLayout::flatten(const Assignment& asg) const {
  std::vector<double> z(size(), 0.0);
  for (std::size_t i = 0; i < I_; ++i) {
    for (std::size_t b = 1; b < B_; ++b)
      for (std::size_t m = 0; m < M_; ++m) z[s_index(i, b, m)] = asg.s(i, b, m);
    for (std::size_t m = 0; m < M_; ++m)
      for (std::size_t a = 0; a < A_; ++a) z[x_index(i, m, a)] = asg.x(i, m, a);
  }
  return z;
}

Assignment VariableLayout::unflatten(std::span<const double> z) const {
  if (z.size() != size()) throw std::invalid_argument("relaxed vector size");
  Assignment asg(I_, B_, M_, A_, /*relaxed=*/true);
  for (std::size_t i = 0; i < I_; ++i) {
    for (std::size_t b = 1; b < B_; ++b)
      for (std::size_t m = 0; m < M_; ++m) asg.s(i, b, m) = z[s_index(i, b, m)];
    for (std::size_t m = 0; m < M_; ++m)
      for (std::size_t a = 0; a < A_; ++a) asg.x(i, m, a) = z[x_index(i, m, a)];
  }
  return asg;
}

// ---------------------------------------------------------------------------
// Constraints

double QuadraticConstraint::value(std::span<const double> z) const {
  double v = c;
  for (const auto& [k, e] : linear) v += e * z[k];
  for (const auto& [k, d] : square) v += d * z[k] * z[k];
  for (const auto& p : pairs) {
    const double t = z[p.x] + z[p.s];
    v += p.h * t * t;
  }
  return v;
}

void QuadraticConstraint::add_gradient(std::span<const double> z, double w,
                                       std::span<double> grad) const {
  for (const auto& [k, e] : linear) grad[k] += w * e;
  for (const auto& [k, d] : square) grad[k] += w * 2.0 * d * z[k];
  for (const auto& p : pairs) {
    const double t = w * 2.0 * p.h * (z[p.x] + z[p.s]);
    grad[p.x] += t;
    grad[p.s] += t;
  }
}

void QuadraticConstraint::along(std::span<const double> z,
                                std::span<const double> d, double& g0,
                                double& g1, double& g2) const {
  g0 = c;
  g1 = 0.0;
  g2 = 0.0;
  for (const auto& [k, e] : linear) {
    g0 += e * z[k];
    g1 += e * d[k];
  }
  for (const auto& [k, q] : square) {
    g0 += q * z[k] * z[k];
    g1 += 2.0 * q * z[k] * d[k];
    g2 += q * d[k] * d[k];
  }
  for (const auto& p : pairs) {
    const double t = z[p.x] + z[p.s];
    const double u = d[p.x] + d[p.s];
    g0 += p.h * t * t;
    g1 += 2.0 * p.h * t * u;
    g2 += p.h * u * u;
  }
}

void QuadraticConstraint::compact() {
  auto merge = [](std::vector<std::pair<std::size_t, double>>& terms) {
    std::sort(terms.begin(), terms.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    std::size_t out = 0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (out > 0 && terms[out - 1].first == terms[k].first) {
        terms[out - 1].second += terms[k].second;
      } else {
        terms[out++] = terms[k];
      }
    }
    terms.resize(out);
  };
  merge(linear);
  merge(square);
}

double SurrogateProblem::value(std::span<const double> z) const {
  double v = constant;
  for (std::size_t k = 0; k < z.size(); ++k) {
    v += linear[k] * z[k] - curvature[k] * z[k] * z[k];
  }
  return v;
}

double SurrogateProblem::max_violation(std::span<const double> z) const {
  double v = 0.0;
  for (const auto& g : constraints) v = std::max(v, g.value(z));
  return v;
}

namespace {

// w * x * s <= w * [1/2 (x + s)^2 - xp x - sp s + 1/2 (xp^2 + sp^2)]
void add_positive_product(QuadraticConstraint& g, std::size_t kx,
                          std::size_t ks, double w, double xp, double sp) {
  if (w == 0.0) return;
  g.pairs.push_back({kx, ks, 0.5 * w});
  g.linear.emplace_back(kx, -w * xp);
  g.linear.emplace_back(ks, -w * sp);
  g.c += 0.5 * w * (xp * xp + sp * sp);
}

// -w * x * s <= w * [-1/2 (xp + sp)^2 - (xp + sp)(x + s - xp - sp)
//                    + 1/2 (x^2 + s^2)]
void add_negative_product(QuadraticConstraint& g, std::size_t kx,
                          std::size_t ks, double w, double xp, double sp) {
  if (w == 0.0) return;
  const double t = xp + sp;
  g.square.emplace_back(kx, 0.5 * w);
  g.square.emplace_back(ks, 0.5 * w);
  g.linear.emplace_back(kx, -w * t);
  g.linear.emplace_back(ks, -w * t);
  g.c += 0.5 * w * t * t;
}

}  // namespace

SurrogateProblem build_surrogate(const Assignment& z_prev,
                                 const RateCoefficients& rc, double mu_s,
                                 double mu_x, const NetworkInstance& inst,
                                 const PowerAllocation& probe,
                                 const SolverConfig& cfg,
                                 const std::vector<std::size_t>& qos_users) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();

  SurrogateProblem sp;
  sp.layout = VariableLayout(inst);
  sp.antenna_mode = cfg.antenna_mode;
  const auto& L = sp.layout;
  const std::size_t n = L.size();
  const std::size_t ns = L.num_s();
  sp.expansion_point = L.flatten(z_prev);
  const auto& zp = sp.expansion_point;

  sp.s_allowed.assign(ns, 0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b)
      if (inst.is_candidate(i, b))
        for (std::size_t m = 0; m < M; ++m) sp.s_allowed[L.s_index(i, b, m)] = 1;

  // u = sum r/2 (x + s)^2 + mu_s sum s^2 + mu_x sum x^2
  // v = sum r/2 (x^2 + s^2) + mu_s sum s + mu_x sum x
  std::vector<double> grad_u(n, 0.0);
  sp.curvature.assign(n, 0.0);
  double u0 = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t ks = L.s_index(i, b, m);
        for (std::size_t a = 0; a < A; ++a) {
          const double r = rc.rbar(i, b, m, a);
          if (r == 0.0) continue;
          const std::size_t kx = L.x_index(i, m, a);
          const double t = zp[kx] + zp[ks];
          grad_u[ks] += r * t;
          grad_u[kx] += r * t;
          sp.curvature[ks] += 0.5 * r;
          sp.curvature[kx] += 0.5 * r;
          u0 += 0.5 * r * t * t;
        }
      }
  sp.linear.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = k < ns ? mu_s : mu_x;
    grad_u[k] += 2.0 * mu * zp[k];
    u0 += mu * zp[k] * zp[k];
    sp.linear[k] = grad_u[k] - mu;
  }
  sp.constant = u0;
  for (std::size_t k = 0; k < n; ++k) sp.constant -= grad_u[k] * zp[k];

  // C1, only where some probe power exceeds the budget; otherwise every
  // point of the polytope satisfies it.
  if (cfg.p_max > 0.0) {
    for (std::size_t i = 0; i < I; ++i) {
      bool needed = false;
      for (std::size_t b = 1; b < B && !needed; ++b)
        for (std::size_t m = 0; m < M && !needed; ++m)
          for (std::size_t a = 0; a < A; ++a)
            if (probe(i, b, m, a) > cfg.p_max) needed = true;
      if (!needed) continue;
      QuadraticConstraint g;
      g.kind = Constraint::kC1PowerBudget;
      g.index = i;
      g.c = -1.0;
      for (std::size_t b = 1; b < B; ++b)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t a = 0; a < A; ++a) {
            const std::size_t ks = L.s_index(i, b, m);
            const std::size_t kx = L.x_index(i, m, a);
            if (!sp.s_allowed[ks]) continue;
            add_positive_product(g, kx, ks, probe(i, b, m, a) / cfg.p_max,
                                 zp[kx], zp[ks]);
          }
      sp.constraints.push_back(std::move(g));
    }
  }

  // C2 per sub-channel.
  const double c2_scale = cfg.i_th > 0.0 ? cfg.i_th : inst.noise_power();
  for (std::size_t m = 0; m < M; ++m) {
    QuadraticConstraint g;
    g.kind = Constraint::kC2CrossTier;
    g.index = m;
    g.c = -cfg.i_th / c2_scale;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t b = 1; b < B; ++b) {
        const std::size_t ks = L.s_index(i, b, m);
        if (!sp.s_allowed[ks]) continue;
        for (std::size_t a = 0; a < A; ++a) {
          const std::size_t kx = L.x_index(i, m, a);
          add_positive_product(
              g, kx, ks, probe(i, b, m, a) * inst.macro_gain(i, m, a) / c2_scale,
              zp[kx], zp[ks]);
        }
      }
    if (!g.pairs.empty()) sp.constraints.push_back(std::move(g));
  }

  // C3 for users already served at the expansion point.
  if (cfg.r_min > 0.0) {
    for (std::size_t i : qos_users) {
      QuadraticConstraint g;
      g.kind = Constraint::kC3MinRate;
      g.index = i;
      g.c = 1.0;
      for (std::size_t b = 1; b < B; ++b)
        for (std::size_t m = 0; m < M; ++m) {
          const std::size_t ks = L.s_index(i, b, m);
          if (!sp.s_allowed[ks]) continue;
          for (std::size_t a = 0; a < A; ++a) {
            const std::size_t kx = L.x_index(i, m, a);
            add_negative_product(g, kx, ks, rc.rbar(i, b, m, a) / cfg.r_min,
                                 zp[kx], zp[ks]);
          }
        }
      sp.constraints.push_back(std::move(g));
    }
  }
  for (auto& g : sp.constraints) g.compact();
  return sp;
}

// ---------------------------------------------------------------------------
// Frank-Wolfe

std::vector<double> linear_oracle(const SurrogateProblem& sp,
                                  std::span<const double> grad) {
  const auto& L = sp.layout;
  const std::size_t I = L.num_users();
  const std::size_t K = L.num_slots();
  const std::size_t M = L.num_subchannels();
  const std::size_t A = L.num_antennas();
  std::vector<double> v(L.size(), 0.0);

  if (K > 0 && I > 0) {
    std::vector<double> w(I * K, 0.0);
    for (std::size_t k = 0; k < I * K; ++k) {
      if (sp.s_allowed[k]) w[k] = grad[k];
    }
    const auto match = max_weight_matching(w, I, K);
    for (std::size_t i = 0; i < I; ++i) {
      if (match[i] >= 0) v[i * K + static_cast<std::size_t>(match[i])] = 1.0;
    }
  }
  if (A == 0) return v;
  if (sp.antenna_mode == AntennaMode::kBulk) {
    std::vector<double> total(A);
    for (std::size_t i = 0; i < I; ++i) {
      std::fill(total.begin(), total.end(), 0.0);
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) total[a] += grad[L.x_index(i, m, a)];
      const std::size_t best = argmax(total.data(), A);
      for (std::size_t m = 0; m < M; ++m) v[L.x_index(i, m, best)] = 1.0;
    }
  } else {
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t k0 = L.x_index(i, m, 0);
        v[k0 + argmax(&grad[k0], A)] = 1.0;
      }
  }
  return v;
}

SurrogateSolution solve_surrogate(const SurrogateProblem& sp,
                                  std::span<const double> start,
                                  std::vector<double>& lambda,
                                  const SolverConfig& cfg) {
  const std::size_t n = sp.layout.size();
  const std::size_t J = sp.constraints.size();
  if (start.size() != n) throw std::invalid_argument("start point size");
  lambda.resize(J, 0.0);

  SurrogateSolution sol;
  sol.z.assign(start.begin(), start.end());
  auto& z = sol.z;

  double obj_scale = 1e-12;
  for (double c : sp.linear) obj_scale = std::max(obj_scale, std::abs(c));
  double rho = cfg.psi0 * obj_scale;

  std::vector<double> grad(n), d(n), gval(J), g0(J), g1(J), g2(J);
  for (std::size_t j = 0; j < J; ++j) gval[j] = sp.constraints[j].value(z);
  // gval tracks g_j(z) exactly: each step moves along a direction on which
  // g_j is the quadratic (g0, g1, g2).
  auto augmented_gradient = [&] {
    for (std::size_t k = 0; k < n; ++k) {
      grad[k] = sp.linear[k] - 2.0 * sp.curvature[k] * z[k];
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double w = positive(lambda[j] + rho * gval[j]);
      if (w > 0.0) sp.constraints[j].add_gradient(z, -w, grad);
    }
  };

  const int rounds = J == 0 ? 1 : cfg.sched_alm_rounds;
  for (int round = 0; round < rounds; ++round) {
    for (int it = 0; it < cfg.fw_max_iter; ++it) {
      augmented_gradient();
      const auto v = linear_oracle(sp, grad);
      double gap = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        d[k] = v[k] - z[k];
        gap += grad[k] * d[k];
      }
      double value = sp.value(z);
      for (std::size_t j = 0; j < J; ++j) {
        const double t = positive(lambda[j] + rho * gval[j]);
        value -= (t * t - lambda[j] * lambda[j]) / (2.0 * rho);
      }
      ++sol.fw_iterations;
      sol.fw_gap = gap;
      if (gap <= cfg.fw_gap_tol * std::max(1.0, std::abs(value))) break;

      // Exact line search: the augmented surrogate is concave along d, so
      // bisect on its derivative.
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        s1 += (sp.linear[k] - 2.0 * sp.curvature[k] * z[k]) * d[k];
        s2 += sp.curvature[k] * d[k] * d[k];
      }
      for (std::size_t j = 0; j < J; ++j) {
        sp.constraints[j].along(z, d, g0[j], g1[j], g2[j]);
      }
      auto slope = [&](double t) {
        double r = s1 - 2.0 * t * s2;
        for (std::size_t j = 0; j < J; ++j) {
          const double w =
              positive(lambda[j] + rho * (g0[j] + t * (g1[j] + t * g2[j])));
          r -= w * (g1[j] + 2.0 * t * g2[j]);
        }
        return r;
      };
      double step = 1.0;
      if (slope(1.0) < 0.0) {
        double lo = 0.0, hi = 1.0;
        for (int b = 0; b < 60 && hi - lo > 1e-14; ++b) {
          const double mid = 0.5 * (lo + hi);
          (slope(mid) > 0.0 ? lo : hi) = mid;
        }
        step = lo;
      }
      if (step <= 0.0) break;
      for (std::size_t k = 0; k < n; ++k) z[k] += step * d[k];
      for (std::size_t j = 0; j < J; ++j) {
        gval[j] = g0[j] + step * (g1[j] + step * g2[j]);
      }
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double g = gval[j];
      worst = std::max(worst, g);
      lambda[j] = positive(lambda[j] + rho * g);
    }
    sol.max_violation = worst;
    if (worst <= 1e-6) break;
    rho *= 2.0;
  }

  // Clean round-off outside the box.
  for (double& v : z) v = std::clamp(v, 0.0, 1.0);

  constexpr double kBindingTol = 1e-2;
  double worst = kBindingTol;
  for (const auto& g : sp.constraints) {
    const double v = g.value(z);
    if (v > worst) {
      worst = v;
      sol.binding = g;
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Rounding

Assignment round_assignment(const Assignment& z, const NetworkInstance& inst,
                            const RateCoefficients& rc,
                            const PowerAllocation& probe,
                            const SolverConfig& cfg) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  const bool bulk = cfg.antenna_mode == AntennaMode::kBulk;

  // Antenna choice per (user, sub-channel).
  std::vector<std::size_t> antenna(I * M, 0);
  std::vector<double> score(A);
  for (std::size_t i = 0; i < I; ++i) {
    if (bulk) {
      std::fill(score.begin(), score.end(), 0.0);
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) score[a] += z.x(i, m, a);
      const std::size_t best = A > 0 ? argmax(score.data(), A) : 0;
      for (std::size_t m = 0; m < M; ++m) antenna[i * M + m] = best;
    } else {
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t a = 0; a < A; ++a) score[a] = z.x(i, m, a);
        antenna[i * M + m] = A > 0 ? argmax(score.data(), A) : 0;
      }
    }
  }

  struct Candidate {
    Tuple t;
    double r;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b) {
      if (!inst.is_candidate(i, b)) continue;
      for (std::size_t m = 0; m < M; ++m) {
        if (z.s(i, b, m) < 0.5) continue;
        const std::size_t a = antenna[i * M + m];
        cands.push_back({{i, b, m, a}, rc.rbar(i, b, m, a)});
      }
    }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& l, const Candidate& r) { return l.r > r.r; });

  Assignment out(I, B, M, A);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t m = 0; m < M; ++m)
      if (A > 0) out.set_antenna(i, m, antenna[i * M + m]);

  std::vector<char> user_used(I, 0), slot_used(B * M, 0);
  std::vector<Candidate> kept;
  for (const auto& c : cands) {
    if (user_used[c.t.user] || slot_used[c.t.bs * M + c.t.subchannel]) continue;
    if (probe[c.t] > cfg.p_max) continue;  // C1 at the probe power
    user_used[c.t.user] = 1;
    slot_used[c.t.bs * M + c.t.subchannel] = 1;
    kept.push_back(c);
  }

  // C2 per sub-channel: shed the weakest tuples until the budget holds.
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<Candidate*> on_m;
    double load = 0.0;
    for (auto& c : kept) {
      if (c.t.subchannel != m) continue;
      on_m.push_back(&c);
      load += probe[c.t] * inst.macro_gain(c.t.user, m, c.t.antenna);
    }
    // on_m is in descending rbar order; drop from the back.
    while (!on_m.empty() && load > cfg.i_th * (1.0 + 1e-12)) {
      Candidate* c = on_m.back();
      on_m.pop_back();
      load -= probe[c->t] * inst.macro_gain(c->t.user, m, c->t.antenna);
      c->r = -1.0;  // dropped
    }
  }
  for (const auto& c : kept) {
    if (c.r >= 0.0) out.activate(c.t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// MM loop

namespace {

// Exact maximizer of the unconstrained scheduling problem: one slot per user
// by max-weight matching on the best single-tuple rate, using only tuples
// that meet C1 and C2 on their own at the probe powers, then repaired for
// the shared C2 budgets.
Assignment matching_vertex(const NetworkInstance& inst,
                           const RateCoefficients& rc,
                           const PowerAllocation& probe,
                           const SolverConfig& cfg) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  const std::size_t K = (B - 1) * M;
  std::vector<double> weight(I * K, 0.0);
  std::vector<std::size_t> best_antenna(I * K, 0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b) {
      if (!inst.is_candidate(i, b)) continue;
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) {
          const double p = probe(i, b, m, a);
          if (p > cfg.p_max || p * inst.macro_gain(i, m, a) > cfg.i_th) continue;
          const std::size_t k = i * K + (b - 1) * M + m;
          if (rc.rbar(i, b, m, a) > weight[k]) {
            weight[k] = rc.rbar(i, b, m, a);
            best_antenna[k] = a;
          }
        }
    }
  const std::vector<int> match = max_weight_matching(weight, I, K);
  Assignment z(I, B, M, A, /*relaxed=*/true);
  for (std::size_t i = 0; i < I; ++i) {
    if (match[i] < 0) {
      for (std::size_t m = 0; m < M; ++m) z.x(i, m, 0) = 1.0;
      continue;
    }
    const std::size_t k = i * K + static_cast<std::size_t>(match[i]);
    const std::size_t b = 1 + static_cast<std::size_t>(match[i]) / M;
    const std::size_t m = static_cast<std::size_t>(match[i]) % M;
    z.s(i, b, m) = 1.0;
    for (std::size_t mm = 0; mm < M; ++mm) z.x(i, mm, best_antenna[k]) = 1.0;
  }
  Assignment out = round_assignment(z, inst, rc, probe, cfg);

  // Users shed by the C2 repair get their best tuple that still fits.
  std::vector<char> slot_used(B * M, 0);
  std::vector<double> load(M, 0.0);
  for (const Tuple& t : out.active_tuples()) {
    slot_used[t.bs * M + t.subchannel] = 1;
    load[t.subchannel] += probe[t] * inst.macro_gain(t.user, t.subchannel, t.antenna);
  }
  for (std::size_t i = 0; i < I; ++i) {
    if (out.scheduled(i)) continue;
    std::optional<Tuple> best;
    for (std::size_t b = 1; b < B; ++b) {
      if (!inst.is_candidate(i, b)) continue;
      for (std::size_t m = 0; m < M; ++m) {
        if (slot_used[b * M + m]) continue;
        for (std::size_t a = 0; a < A; ++a) {
          const double p = probe(i, b, m, a);
          if (p > cfg.p_max || load[m] + p * inst.macro_gain(i, m, a) > cfg.i_th) continue;
          if (rc.rbar(i, b, m, a) <= 0.0) continue;
          if (!best || rc.rbar(i, b, m, a) >
                           rc.rbar(i, best->bs, best->subchannel, best->antenna)) {
            best = Tuple{i, b, m, a};
          }
        }
      }
    }
    if (!best) continue;
    if (cfg.antenna_mode == AntennaMode::kBulk) {
      for (std::size_t m = 0; m < M; ++m) out.set_antenna(i, m, best->antenna);
    }
    out.activate(*best);
    slot_used[best->bs * M + best->subchannel] = 1;
    load[best->subchannel] += probe[*best] * inst.macro_gain(i, best->subchannel, best->antenna);
  }
  return out;
}

double coefficient_sum(const Assignment& asg, const RateCoefficients& rc) {
  double total = 0.0;
  for (const Tuple& t : asg.active_tuples()) {
    total += rc.rbar(t.user, t.bs, t.subchannel, t.antenna);
  }
  return total;
}

// Users of `qos` whose tuple in `asg` reaches r_min at the frozen rates.
std::size_t qos_served(const Assignment& asg, const RateCoefficients& rc,
                       const std::vector<std::size_t>& qos, double r_min) {
  std::size_t served = 0;
  for (const Tuple& t : asg.active_tuples()) {
    if (std::find(qos.begin(), qos.end(), t.user) == qos.end()) continue;
    served += rc.rbar(t.user, t.bs, t.subchannel, t.antenna) >= r_min;
  }
  return served;
}

}  // namespace

ScheduleResult mm_schedule(const NetworkInstance& inst,
                           const Assignment& prev_asg,
                           const PowerAllocation& prev_p,
                           const SolverConfig& cfg) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();

  ScheduleResult result;
  const RateCoefficients rc = rate_coefficients(inst, prev_asg, prev_p);
  const VariableLayout layout(inst);
  const double rmax = rc.max();
  if (rmax <= 0.0 || layout.num_s() == 0) {
    // Nothing to gain at the frozen powers: keep the previous schedule,
    // repaired for C1/C2.
    result.relaxed = layout.unflatten(layout.flatten(prev_asg));
    result.assignment = round_assignment(result.relaxed, inst, rc, prev_p, cfg);
    result.binariness_gap = 0.0;
    return result;
  }

  std::vector<std::size_t> qos;
  if (cfg.r_min > 0.0) {
    for (std::size_t i = 0; i < I; ++i) {
      if (!prev_asg.scheduled(i)) continue;
      double best = 0.0;
      for (std::size_t b = 1; b < B; ++b)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t a = 0; a < A; ++a)
            best = std::max(best, rc.rbar(i, b, m, a));
      if (best >= cfg.r_min) qos.push_back(i);
    }
  }

  // Warm start: previous binary point pulled towards the polytope centre.
  std::vector<double> z = layout.flatten(prev_asg);
  {
    const std::size_t ns = layout.num_s();
    const double s_uniform =
        1.0 / static_cast<double>(std::max(I, layout.num_slots()));
    const double x_uniform = A > 0 ? 1.0 / static_cast<double>(A) : 0.0;
    const double mix = cfg.warm_start_mix;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t b = 1; b < B; ++b) {
        const bool allowed = inst.is_candidate(i, b);
        for (std::size_t m = 0; m < M; ++m) {
          const std::size_t k = layout.s_index(i, b, m);
          z[k] = allowed ? mix * z[k] + (1.0 - mix) * s_uniform : 0.0;
        }
      }
    for (std::size_t k = ns; k < z.size(); ++k) {
      z[k] = mix * z[k] + (1.0 - mix) * x_uniform;
    }
  }

  const double scale = cfg.mu_relative ? rmax : 1.0;
  const double target_s = cfg.mu1 * scale;
  const double target_x = cfg.mu2 * scale;
  std::map<std::pair<int, std::size_t>, double> multipliers;

  auto max_gap = [](const std::vector<double>& v) {
    double gap = 0.0;
    for (double e : v) gap = std::max(gap, std::abs(e - std::round(e)));
    return gap;
  };
  // Violation of the unconvexified C1/C2 budgets (the surrogate built at a
  // point is exact there). C3 is left to power control.
  auto budget_violation = [&](const Assignment& at) {
    const auto local = build_surrogate(at, rc, 0.0, 0.0, inst, prev_p, cfg, {});
    return local.max_violation(local.expansion_point);
  };
  bool rounding_tried = false;
  std::vector<double> z_rounded;
  double p_rounded = 0.0;

  double mu_t = cfg.mu_start * scale;
  for (int t = 1; t <= cfg.t_j_max; ++t) {
    const double mu_s = std::min(target_s, mu_t);
    const double mu_x = std::min(target_x, mu_t);
    mu_t *= cfg.mu_growth;

    const Assignment z_asg = layout.unflatten(z);
    SurrogateProblem sp;
    SurrogateSolution sol;
    for (;;) {
      sp = build_surrogate(z_asg, rc, mu_s, mu_x, inst, prev_p, cfg, qos);
      std::vector<double> lambda(sp.constraints.size(), 0.0);
      for (std::size_t j = 0; j < lambda.size(); ++j) {
        const auto key = std::make_pair(static_cast<int>(sp.constraints[j].kind),
                                        sp.constraints[j].index);
        if (auto it = multipliers.find(key); it != multipliers.end()) {
          lambda[j] = it->second;
        }
      }
      sol = solve_surrogate(sp, z, lambda, cfg);
      for (std::size_t j = 0; j < lambda.size(); ++j) {
        multipliers[{static_cast<int>(sp.constraints[j].kind),
                     sp.constraints[j].index}] = lambda[j];
      }
      if (sol.binding && sol.binding->kind == Constraint::kC3MinRate) {
        const std::size_t user = sol.binding->index;
        qos.erase(std::remove(qos.begin(), qos.end(), user), qos.end());
        result.dropped_qos.push_back(user);
        continue;
      }
      break;
    }

    const double p_before = penalized_objective(z_asg, rc, mu_s, mu_x);
    const double p_after =
        penalized_objective(layout.unflatten(sol.z), rc, mu_s, mu_x);
    const double v_before = sp.max_violation(z);
    const double v_after = sp.max_violation(sol.z);
    const bool accepted = p_after >= p_before - 1e-12 * (1.0 + std::abs(p_before)) ||
                          v_after < v_before - 1e-12;
    if (accepted) z = sol.z;
    result.trace.push_back({mu_s, mu_x, p_before, accepted ? p_after : p_before,
                            accepted ? v_after : v_before, sol.fw_iterations,
                            accepted});

    const bool at_target = mu_s >= target_s && mu_x >= target_x;
    const double change = accepted ? std::abs(p_after - p_before) : 0.0;
    if (!at_target || change > cfg.mm_tol * std::max(1.0, std::abs(p_before))) {
      continue;
    }
    // Stalled at the target weights. A fractional point held by the
    // convexified budgets can creep for many iterations; jump to its rounding
    // when that is an ascent step with no worse (true) constraint violation.
    if (rounding_tried || max_gap(z) <= 1e-9) break;
    rounding_tried = true;
    const Assignment current = layout.unflatten(z);
    const Assignment rounded = round_assignment(current, inst, rc, prev_p, cfg);
    const std::vector<double> zr = layout.flatten(rounded);
    const double p_cur = penalized_objective(current, rc, mu_s, mu_x);
    const double p_round = penalized_objective(rounded, rc, mu_s, mu_x);
    const double v_cur = budget_violation(current);
    const double v_round = budget_violation(rounded);
    if (p_round < p_cur || v_round > v_cur + 1e-12) break;
    z = zr;
    z_rounded = zr;
    p_rounded = p_round;
    result.trace.push_back({mu_s, mu_x, p_cur, p_round, v_round, 0, true});
  }
  // Later iterations may trade objective for C3 violation and leave the
  // rounded point; keep it unless they found something better.
  if (!z_rounded.empty() && max_gap(z) > 1e-9 &&
      penalized_objective(layout.unflatten(z), rc, target_s, target_x) <=
          p_rounded) {
    z = z_rounded;
  }

  result.relaxed = layout.unflatten(z);
  result.binariness_gap = max_gap(z);
  result.assignment = round_assignment(result.relaxed, inst, rc, prev_p, cfg);

  // MM on the bilinear objective can settle at a stationary point that the
  // matching vertex beats outright.
  const Assignment matched = matching_vertex(inst, rc, prev_p, cfg);
  if (coefficient_sum(matched, rc) > coefficient_sum(result.assignment, rc) &&
      qos_served(matched, rc, qos, cfg.r_min) >=
          qos_served(result.assignment, rc, qos, cfg.r_min)) {
    result.assignment = matched;
  }
  if (result.assignment.active_tuples().empty() &&
      !prev_asg.active_tuples().empty()) {
    const Assignment repaired = round_assignment(
        layout.unflatten(layout.flatten(prev_asg)), inst, rc, prev_p, cfg);
    if (!repaired.active_tuples().empty()) {
      result.assignment = repaired;
      result.fallback = true;
    }
  }
  return result;
}

}  // namespace hetnet
