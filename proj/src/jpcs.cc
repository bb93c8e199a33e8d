#include "hetnet/jpcs.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hetnet/chansim.h"
#include "hetnet/powerctl.h"
#include "hetnet/scheduler.h"

namespace hetnet {

namespace {

constexpr double kRateTol = 1e-9;

std::size_t count_scheduled(const Assignment& asg) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < asg.num_users(); ++i) n += asg.scheduled(i);
  return n;
}

// Scheduled user with the largest C3 deficit, if any.
std::optional<std::size_t> worst_qos_violator(const NetworkInstance& inst,
                                              const Assignment& asg,
                                              const PowerAllocation& p,
                                              const SolverConfig& cfg) {
  if (cfg.r_min <= 0.0) return std::nullopt;
  const auto rates = user_rates(inst, asg, p);
  std::optional<std::size_t> worst;
  double deficit = kRateTol;
  for (std::size_t i = 0; i < inst.num_users(); ++i) {
    if (!asg.scheduled(i)) continue;
    if (cfg.r_min - rates[i] > deficit) {
      deficit = cfg.r_min - rates[i];
      worst = i;
    }
  }
  return worst;
}

void clear_user(PowerAllocation& p, std::size_t i) {
  auto& t = p.tensor();
  for (std::size_t b = 0; b < t.dim(1); ++b)
    for (std::size_t m = 0; m < t.dim(2); ++m)
      for (std::size_t a = 0; a < t.dim(3); ++a) t(i, b, m, a) = 0.0;
}

// Keeps only the powers of active tuples.
PowerAllocation restrict_to(const PowerAllocation& probe,
                            const Assignment& asg) {
  PowerAllocation p(asg.num_users(), asg.num_bs(), asg.num_subchannels(),
                    asg.num_antennas());
  for (const Tuple& t : asg.active_tuples()) p[t] = probe[t];
  return p;
}

// Drops the worst C3 violator until every scheduled user meets R_min, with
// powers fixed.
void repair_fixed_power(const NetworkInstance& inst, Assignment& asg,
                        PowerAllocation& p, const SolverConfig& cfg,
                        std::vector<std::size_t>& dropped) {
  while (auto i = worst_qos_violator(inst, asg, p, cfg)) {
    asg.deactivate_user(*i);
    clear_user(p, *i);
    dropped.push_back(*i);
  }
}

struct Powered {
  PowerAllocation power;
  int alm_iterations = 0;
};

// ALM power control followed by dropping users that miss R_min (those
// hopeless alone first, then the worst violator) and re-optimizing.
Powered control_with_repair(const NetworkInstance& inst, Assignment& asg,
                            const PowerAllocation& warm,
                            const SolverConfig& cfg,
                            std::vector<std::size_t>& dropped) {
  Powered out;
  PowerAllocation start = warm;
  for (;;) {
    auto pc = alm_power_control(inst, asg, start, cfg);
    out.alm_iterations += pc.alm_iterations;
    out.power = pc.power;
    std::vector<std::size_t> remove = pc.qos_users_infeasible;
    if (remove.empty()) {
      if (auto i = worst_qos_violator(inst, asg, pc.power, cfg)) remove.push_back(*i);
    }
    if (remove.empty()) return out;
    for (std::size_t i : remove) {
      asg.deactivate_user(i);
      dropped.push_back(i);
    }
    start = pc.power;
    for (std::size_t i : remove) clear_user(start, i);
  }
}

void finalize(const NetworkInstance& inst, const SolverConfig& cfg,
              AllocationReport& r) {
  r.user_rates = user_rates(inst, r.assignment, r.power);
  r.sum_rate = sum_rate(inst, r.assignment, r.power);
  r.violations = check_feasibility(inst, r.assignment, r.power, cfg);
  r.qos_infeasible = !r.dropped_users.empty();
  std::sort(r.dropped_users.begin(), r.dropped_users.end());
  r.dropped_users.erase(std::unique(r.dropped_users.begin(), r.dropped_users.end()),
                        r.dropped_users.end());
}

}  // namespace

std::string to_string(InitPolicy p) {
  switch (p) {
    case InitPolicy::kUniform: return "uniform";
    case InitPolicy::kFull: return "full";
    case InitPolicy::kRandom: return "random";
  }
  return "?";
}

InitPolicy parse_init_policy(const std::string& name) {
  if (name == "uniform") return InitPolicy::kUniform;
  if (name == "full") return InitPolicy::kFull;
  if (name == "random") return InitPolicy::kRandom;
  throw std::invalid_argument("unknown init policy '" + name + "'");
}

Assignment greedy_assignment(const NetworkInstance& inst, AntennaMode mode) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  std::vector<Tuple> tuples;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b : inst.candidate_cells(i))
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) tuples.push_back({i, b, m, a});
  std::stable_sort(tuples.begin(), tuples.end(), [&](const Tuple& l, const Tuple& r) {
    return inst.gain(l.user, l.bs, l.subchannel, l.antenna) >
           inst.gain(r.user, r.bs, r.subchannel, r.antenna);
  });
  Assignment asg = Assignment::empty_for(inst);
  std::vector<char> user_used(I, 0), slot_used(B * M, 0);
  for (const Tuple& t : tuples) {
    if (user_used[t.user] || slot_used[t.bs * M + t.subchannel]) continue;
    user_used[t.user] = 1;
    slot_used[t.bs * M + t.subchannel] = 1;
    asg.activate(t);
    if (mode == AntennaMode::kBulk) {
      for (std::size_t m = 0; m < M; ++m) asg.set_antenna(t.user, m, t.antenna);
    }
  }
  return asg;
}

PowerAllocation initial_power(const NetworkInstance& inst,
                              const Assignment& asg, const SolverConfig& cfg,
                              const RunOptions& opts) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  std::vector<double> level(I, cfg.p_max);
  if (opts.init == InitPolicy::kUniform) {
    std::fill(level.begin(), level.end(),
              M > 0 ? cfg.p_max / static_cast<double>(M) : 0.0);
  } else if (opts.init == InitPolicy::kRandom) {
    DropRng rng(opts.init_seed);
    for (double& v : level) v = cfg.p_max * rng.uniform();
  }

  PowerAllocation p(inst);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) {
          p(i, b, m, a) = std::min(level[i], tuple_power_cap(inst, {i, b, m, a}, cfg));
        }

  for (std::size_t m = 0; m < M; ++m) {
    double load = 0.0;
    for (const Tuple& t : asg.active_tuples()) {
      if (t.subchannel == m) load += p[t] * inst.macro_gain(t.user, m, t.antenna);
    }
    if (load <= cfg.i_th) continue;
    const double f = cfg.i_th / load;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t b = 1; b < B; ++b)
        for (std::size_t a = 0; a < A; ++a) p(i, b, m, a) *= f;
  }
  return p;
}

PowerAllocation equal_power(const NetworkInstance& inst, const Assignment& asg,
                            const SolverConfig& cfg) {
  PowerAllocation p(inst);
  const auto tuples = asg.active_tuples();
  for (const Tuple& t : tuples) {
    if (t.bs != kMacroBs) p[t] = cfg.p_max;
  }
  for (std::size_t m = 0; m < inst.num_subchannels(); ++m) {
    double load = 0.0;
    for (const Tuple& t : tuples) {
      if (t.subchannel == m) load += p[t] * inst.macro_gain(t.user, m, t.antenna);
    }
    if (load <= cfg.i_th) continue;
    const double f = cfg.i_th / load;
    for (const Tuple& t : tuples) {
      if (t.subchannel == m) p[t] *= f;
    }
  }
  return p;
}

AllocationReport run_jpcs(const NetworkInstance& inst, const SolverConfig& cfg,
                          const RunOptions& opts) {
  cfg.validate();
  AllocationReport report;
  Assignment asg = greedy_assignment(inst, cfg.antenna_mode);
  PowerAllocation probe = initial_power(inst, asg, cfg, opts);
  PowerAllocation power = restrict_to(probe, asg);
  repair_fixed_power(inst, asg, power, cfg, report.dropped_users);
  double incumbent = sum_rate(inst, asg, power);
  report.trace.push_back(incumbent);

  for (int t = 1; t <= cfg.outer_max_iter; ++t) {
    // The first iteration only optimizes the powers of the initial schedule,
    // starting from p[0]; later ones schedule first.
    const bool power_only = t == 1;
    ScheduleResult sched;
    if (!power_only) sched = mm_schedule(inst, asg, probe, cfg);
    Assignment next = power_only ? asg : sched.assignment;
    std::vector<std::size_t> dropped;
    const Powered pc =
        control_with_repair(inst, next, restrict_to(probe, next), cfg, dropped);
    const double value = sum_rate(inst, next, pc.power);

    const bool accepted = value >= incumbent;
    report.iterations.push_back({t, value, static_cast<int>(sched.trace.size()),
                                 pc.alm_iterations, count_scheduled(next),
                                 accepted});
    report.mm_iterations += static_cast<int>(sched.trace.size());
    report.alm_iterations += pc.alm_iterations;
    report.outer_iterations = t;
    if (!accepted) {
      if (power_only) continue;
      // No further progress from this iterate; keep the incumbent.
      report.converged = true;
      break;
    }
    if (!power_only) report.binariness_gap = sched.binariness_gap;
    const double change = value - incumbent;
    asg = std::move(next);
    power = pc.power;
    incumbent = value;
    report.trace.push_back(value);
    report.dropped_users.insert(report.dropped_users.end(), dropped.begin(),
                                dropped.end());

    // Served users probe every tuple at their new power level.
    for (std::size_t i = 0; i < inst.num_users(); ++i) {
      const auto slot = asg.slot_of(i);
      if (!slot) continue;
      double level = 0.0;
      for (std::size_t a = 0; a < inst.num_antennas(); ++a) {
        level = std::max(level, power(i, slot->first, slot->second, a));
      }
      if (level <= 0.0) continue;
      for (std::size_t b = 1; b < inst.num_bs(); ++b)
        for (std::size_t m = 0; m < inst.num_subchannels(); ++m)
          for (std::size_t a = 0; a < inst.num_antennas(); ++a) {
            probe(i, b, m, a) =
                std::min(level, tuple_power_cap(inst, {i, b, m, a}, cfg));
          }
    }
    if (!power_only && change <= cfg.eps_outer) {
      report.converged = true;
      break;
    }
  }

  report.assignment = std::move(asg);
  report.power = std::move(power);
  finalize(inst, cfg, report);
  return report;
}

AllocationReport run_epa(const NetworkInstance& inst, const SolverConfig& cfg,
                         const RunOptions& opts) {
  cfg.validate();
  AllocationReport report;
  const Assignment init = greedy_assignment(inst, cfg.antenna_mode);
  RunOptions full = opts;
  full.init = InitPolicy::kFull;
  const PowerAllocation probe = initial_power(inst, init, cfg, full);
  {
    Assignment a0 = init;
    PowerAllocation p0 = restrict_to(probe, a0);
    std::vector<std::size_t> ignored;
    repair_fixed_power(inst, a0, p0, cfg, ignored);
    report.trace.push_back(sum_rate(inst, a0, p0));
  }

  const ScheduleResult sched = mm_schedule(inst, init, probe, cfg);
  Assignment asg = sched.assignment;
  PowerAllocation power = equal_power(inst, asg, cfg);
  while (auto i = worst_qos_violator(inst, asg, power, cfg)) {
    asg.deactivate_user(*i);
    report.dropped_users.push_back(*i);
    power = equal_power(inst, asg, cfg);
  }
  report.mm_iterations = static_cast<int>(sched.trace.size());
  report.outer_iterations = 1;
  report.binariness_gap = sched.binariness_gap;
  report.converged = true;
  report.assignment = std::move(asg);
  report.power = std::move(power);
  finalize(inst, cfg, report);
  report.trace.push_back(report.sum_rate);
  report.iterations.push_back({1, report.sum_rate, report.mm_iterations, 0,
                               count_scheduled(report.assignment), true});
  return report;
}

AllocationReport run_bulk_as(const NetworkInstance& inst,
                             const SolverConfig& cfg, const RunOptions& opts) {
  SolverConfig bulk = cfg;
  bulk.antenna_mode = AntennaMode::kBulk;
  return run_jpcs(inst, bulk, opts);
}

AllocationReport run_single_antenna(const NetworkInstance& inst,
                                    const SolverConfig& cfg,
                                    const RunOptions& opts) {
  if (inst.num_antennas() == 0) return run_jpcs(inst, cfg, opts);
  return run_jpcs(inst.restrict_antennas(1), cfg, opts);
}

}  // namespace hetnet
