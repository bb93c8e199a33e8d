#include "hetnet/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hetnet {

namespace {

void check_index(std::size_t value, std::size_t extent, const char* what) {
  if (value >= extent) {
    throw std::out_of_range(std::string(what) + " index " +
                            std::to_string(value) + " out of range (" +
                            std::to_string(extent) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkInstance

NetworkInstance::NetworkInstance(
    std::size_t num_bs, std::size_t num_users, std::size_t num_subchannels,
    std::size_t num_antennas, std::vector<double> gain, double noise_power,
    std::vector<std::vector<std::size_t>> candidate_cells)
    : num_bs_(num_bs),
      num_users_(num_users),
      num_subchannels_(num_subchannels),
      num_antennas_(num_antennas),
      gain_({num_users, num_bs, num_subchannels, num_antennas},
            std::move(gain)),
      noise_power_(noise_power) {
  if (num_bs < 1) throw std::invalid_argument("instance needs the macro BS");
  if (num_antennas < 1 && num_users > 0) {
    throw std::invalid_argument("users need at least one antenna");
  }
  if (!(noise_power > 0.0) || !std::isfinite(noise_power)) {
    throw std::invalid_argument("noise power must be finite and > 0");
  }
  for (double g : gain_.data()) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("channel gains must be finite and >= 0");
    }
  }
  if (candidate_cells.empty()) {
    candidate_cells.resize(num_users);
    for (auto& cells : candidate_cells) {
      for (std::size_t b = 1; b < num_bs; ++b) cells.push_back(b);
    }
  }
  if (candidate_cells.size() != num_users) {
    throw std::invalid_argument("candidate cell list must have one entry per user");
  }
  candidate_mask_.assign(num_users * num_bs, 0);
  for (std::size_t u = 0; u < num_users; ++u) {
    auto& cells = candidate_cells[u];
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (std::size_t b : cells) {
      if (b == kMacroBs || b >= num_bs) {
        throw std::invalid_argument("candidate cells must be small cells");
      }
      candidate_mask_[u * num_bs + b] = 1;
    }
  }
  candidates_ = std::move(candidate_cells);
}

bool NetworkInstance::is_candidate(std::size_t u, std::size_t b) const {
  check_index(u, num_users_, "user");
  check_index(b, num_bs_, "bs");
  return candidate_mask_[u * num_bs_ + b] != 0;
}

NetworkInstance NetworkInstance::restrict_antennas(std::size_t antennas) const {
  if (antennas < 1 || antennas > num_antennas_) {
    throw std::invalid_argument("cannot restrict to " +
                                std::to_string(antennas) + " antennas");
  }
  std::vector<double> g;
  g.reserve(num_users_ * num_bs_ * num_subchannels_ * antennas);
  for (std::size_t u = 0; u < num_users_; ++u)
    for (std::size_t b = 0; b < num_bs_; ++b)
      for (std::size_t m = 0; m < num_subchannels_; ++m)
        for (std::size_t a = 0; a < antennas; ++a)
          g.push_back(gain_(u, b, m, a));
  return NetworkInstance(num_bs_, num_users_, num_subchannels_, antennas,
                         std::move(g), noise_power_, candidates_);
}

// ---------------------------------------------------------------------------
// Assignment

Assignment::Assignment(std::size_t num_users, std::size_t num_bs,
                       std::size_t num_subchannels, std::size_t num_antennas,
                       bool relaxed)
    : s_({num_users, num_bs, num_subchannels}),
      x_({num_users, num_subchannels, num_antennas}),
      relaxed_(relaxed) {
  if (!relaxed && num_antennas > 0) {
    for (std::size_t i = 0; i < num_users; ++i)
      for (std::size_t m = 0; m < num_subchannels; ++m) x_(i, m, 0) = 1.0;
  }
}

Assignment Assignment::empty_for(const NetworkInstance& inst) {
  return Assignment(inst.num_users(), inst.num_bs(), inst.num_subchannels(),
                    inst.num_antennas());
}

void Assignment::activate(const Tuple& t) {
  s_.check({t.user, t.bs, t.subchannel});
  s_(t.user, t.bs, t.subchannel) = 1.0;
  set_antenna(t.user, t.subchannel, t.antenna);
}

void Assignment::deactivate_user(std::size_t i) {
  check_index(i, num_users(), "user");
  for (std::size_t b = 0; b < num_bs(); ++b)
    for (std::size_t m = 0; m < num_subchannels(); ++m) s_(i, b, m) = 0.0;
}

void Assignment::set_antenna(std::size_t i, std::size_t m, std::size_t a) {
  x_.check({i, m, a});
  for (std::size_t k = 0; k < num_antennas(); ++k) x_(i, m, k) = 0.0;
  x_(i, m, a) = 1.0;
}

std::vector<Tuple> Assignment::active_tuples() const {
  std::vector<Tuple> out;
  for (std::size_t i = 0; i < num_users(); ++i)
    for (std::size_t b = 0; b < num_bs(); ++b)
      for (std::size_t m = 0; m < num_subchannels(); ++m) {
        if (s_(i, b, m) == 0.0) continue;
        for (std::size_t a = 0; a < num_antennas(); ++a) {
          if (s_(i, b, m) * x_(i, m, a) != 0.0) out.push_back({i, b, m, a});
        }
      }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> Assignment::slot_of(
    std::size_t i) const {
  check_index(i, num_users(), "user");
  for (std::size_t b = 0; b < num_bs(); ++b)
    for (std::size_t m = 0; m < num_subchannels(); ++m)
      if (s_(i, b, m) >= 0.5) return std::make_pair(b, m);
  return std::nullopt;
}

double Assignment::binariness_gap() const {
  double gap = 0.0;
  for (double v : s_.data()) gap = std::max(gap, std::abs(v - std::round(v)));
  for (double v : x_.data()) gap = std::max(gap, std::abs(v - std::round(v)));
  return gap;
}

// ---------------------------------------------------------------------------
// PowerAllocation

PowerAllocation::PowerAllocation(const NetworkInstance& inst, double fill)
    : PowerAllocation(inst.num_users(), inst.num_bs(), inst.num_subchannels(),
                      inst.num_antennas(), fill) {}

PowerAllocation::PowerAllocation(std::size_t num_users, std::size_t num_bs,
                                 std::size_t num_subchannels,
                                 std::size_t num_antennas, double fill)
    : p_({num_users, num_bs, num_subchannels, num_antennas}, fill) {}

// ---------------------------------------------------------------------------
// SolverConfig

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument(std::string("invalid ") + field);
  };
  require(std::isfinite(p_max) && p_max >= 0.0, "p_max");
  require(std::isfinite(i_th) && i_th >= 0.0, "i_th");
  require(std::isfinite(r_min) && r_min >= 0.0, "r_min");
  require(std::isfinite(mu1) && mu1 >= 0.0, "mu1");
  require(std::isfinite(mu2) && mu2 >= 0.0, "mu2");
  require(mu_start > 0.0, "mu_start");
  require(mu_growth > 1.0, "mu_growth");
  require(psi0 > 0.0, "psi0");
  require(psi_cap >= psi0, "psi_cap");
  require(eps_outer > 0.0, "eps_outer");
  require(eps_power > 0.0, "eps_power");
  require(mm_tol > 0.0, "mm_tol");
  require(fw_gap_tol > 0.0, "fw_gap_tol");
  require(t_j_max >= 1, "t_j_max");
  require(alm_max_iter >= 1, "alm_max_iter");
  require(inner_max_iter >= 1, "inner_max_iter");
  require(outer_max_iter >= 1, "outer_max_iter");
  require(fw_max_iter >= 1, "fw_max_iter");
  require(sched_alm_rounds >= 1, "sched_alm_rounds");
  require(warm_start_mix >= 0.0 && warm_start_mix <= 1.0, "warm_start_mix");
}

// ---------------------------------------------------------------------------
// Rates

double interference(const NetworkInstance& inst, const Assignment& asg,
                    const PowerAllocation& p, std::size_t b, std::size_t m,
                    std::size_t i) {
  check_index(b, inst.num_bs(), "bs");
  check_index(m, inst.num_subchannels(), "subchannel");
  check_index(i, inst.num_users(), "user");
  double total = 0.0;
  for (std::size_t bp = 0; bp < inst.num_bs(); ++bp) {
    if (bp == b) continue;
    for (std::size_t l = 0; l < inst.num_users(); ++l) {
      if (l == i) continue;
      const double s = asg.s(l, bp, m);
      if (s == 0.0) continue;
      for (std::size_t a = 0; a < inst.num_antennas(); ++a) {
        total += s * asg.x(l, m, a) * p(l, bp, m, a) * inst.gain(l, b, m, a);
      }
    }
  }
  return total;
}

double rate(const NetworkInstance& inst, const Assignment& asg,
            const PowerAllocation& p, std::size_t i, std::size_t b,
            std::size_t m, std::size_t a) {
  check_index(a, inst.num_antennas(), "antenna");
  const double denom = inst.noise_power() + interference(inst, asg, p, b, m, i);
  return std::log2(1.0 + p(i, b, m, a) * inst.gain(i, b, m, a) / denom);
}

std::vector<double> user_rates(const NetworkInstance& inst,
                               const Assignment& asg,
                               const PowerAllocation& p) {
  std::vector<double> out(inst.num_users(), 0.0);
  for (std::size_t i = 0; i < inst.num_users(); ++i)
    for (std::size_t b = 1; b < inst.num_bs(); ++b)
      for (std::size_t m = 0; m < inst.num_subchannels(); ++m) {
        const double s = asg.s(i, b, m);
        if (s == 0.0) continue;
        for (std::size_t a = 0; a < inst.num_antennas(); ++a) {
          const double w = s * asg.x(i, m, a);
          if (w != 0.0) out[i] += w * rate(inst, asg, p, i, b, m, a);
        }
      }
  return out;
}

double sum_rate(const NetworkInstance& inst, const Assignment& asg,
                const PowerAllocation& p) {
  if (asg.relaxed()) {
    throw std::invalid_argument(
        "sum_rate needs a binary assignment; relaxed objectives live in the "
        "scheduler");
  }
  double total = 0.0;
  for (double r : user_rates(inst, asg, p)) total += r;
  return total;
}

// ---------------------------------------------------------------------------
// Feasibility

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::kC1PowerBudget: return "C1";
    case Constraint::kC2CrossTier: return "C2";
    case Constraint::kC3MinRate: return "C3";
    case Constraint::kC4NonNegative: return "C4";
    case Constraint::kC5SlotExclusive: return "C5";
    case Constraint::kC6SingleAssociation: return "C6";
    case Constraint::kC7OneAntenna: return "C7";
    case Constraint::kC8AntennaBinary: return "C8";
    case Constraint::kC9AssociationBinary: return "C9";
  }
  return "?";
}

std::vector<Violation> check_feasibility(const NetworkInstance& inst,
                                         const Assignment& asg,
                                         const PowerAllocation& p,
                                         const SolverConfig& cfg,
                                         const FeasibilityTolerance& tol) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  std::vector<Violation> out;

  // C1: per-user budget over active power.
  for (std::size_t i = 0; i < I; ++i) {
    double load = 0.0;
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a)
          load += asg.x(i, m, a) * asg.s(i, b, m) * p(i, b, m, a);
    if (load - cfg.p_max > tol.relative * cfg.p_max) {
      out.push_back({Constraint::kC1PowerBudget, i, load - cfg.p_max});
    }
  }

  // C2: cross-tier interference at the macro BS, per sub-channel.
  for (std::size_t m = 0; m < M; ++m) {
    double load = 0.0;
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t i = 0; i < I; ++i)
        for (std::size_t a = 0; a < A; ++a)
          load += asg.x(i, m, a) * asg.s(i, b, m) * p(i, b, m, a) *
                  inst.macro_gain(i, m, a);
    if (load - cfg.i_th > tol.relative * cfg.i_th) {
      out.push_back({Constraint::kC2CrossTier, m, load - cfg.i_th});
    }
  }

  // C3: only scheduled users carry a rate requirement.
  const auto rates = user_rates(inst, asg, p);
  for (std::size_t i = 0; i < I; ++i) {
    double scheduled = 0.0;
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) scheduled += asg.s(i, b, m);
    if (scheduled < 0.5) continue;
    if (cfg.r_min - rates[i] > tol.rate) {
      out.push_back({Constraint::kC3MinRate, i, cfg.r_min - rates[i]});
    }
  }

  // C4
  const auto& pd = p.tensor().data();
  for (std::size_t k = 0; k < pd.size(); ++k) {
    if (pd[k] < 0.0) out.push_back({Constraint::kC4NonNegative, k, -pd[k]});
  }

  // C5: one user per (bs, subchannel).
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t m = 0; m < M; ++m) {
      double load = 0.0;
      for (std::size_t i = 0; i < I; ++i) load += asg.s(i, b, m);
      if (load - 1.0 > tol.binary) {
        out.push_back({Constraint::kC5SlotExclusive, b * M + m, load - 1.0});
      }
    }

  // C6: at most one (bs, subchannel) per user, and only on candidate cells.
  for (std::size_t i = 0; i < I; ++i) {
    double load = 0.0;
    double off_candidate = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) {
        load += asg.s(i, b, m);
        if (!inst.is_candidate(i, b)) off_candidate += asg.s(i, b, m);
      }
    const double excess = std::max(load - 1.0, off_candidate);
    if (excess > tol.binary) {
      out.push_back({Constraint::kC6SingleAssociation, i, excess});
    }
  }

  // C7: exactly one antenna per (user, subchannel).
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t m = 0; m < M; ++m) {
      double total = 0.0;
      for (std::size_t a = 0; a < A; ++a) total += asg.x(i, m, a);
      if (std::abs(total - 1.0) > tol.binary) {
        out.push_back({Constraint::kC7OneAntenna, i * M + m,
                       std::abs(total - 1.0)});
      }
    }

  // C8, C9: binariness.
  auto binary_excess = [](double v) {
    return std::abs(v - std::round(v)) + std::max(0.0, -v) +
           std::max(0.0, v - 1.0);
  };
  const auto& xd = asg.x_tensor().data();
  for (std::size_t k = 0; k < xd.size(); ++k) {
    const double e = binary_excess(xd[k]);
    if (e > tol.binary) out.push_back({Constraint::kC8AntennaBinary, k, e});
  }
  const auto& sd = asg.s_tensor().data();
  for (std::size_t k = 0; k < sd.size(); ++k) {
    const double e = binary_excess(sd[k]);
    if (e > tol.binary) out.push_back({Constraint::kC9AssociationBinary, k, e});
  }
  return out;
}

}  // namespace hetnet
