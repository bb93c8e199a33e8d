#include "hetnet/oracle.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hetnet/powerctl.h"

namespace hetnet {
namespace {

constexpr double kMaxAssignments = 1e6;
constexpr double kMaxGridPoints = 1e7;
constexpr std::size_t kMaxGridTuples = 3;

void enumerate_from(const NetworkInstance& inst, std::size_t user,
                    Assignment& asg, std::vector<char>& slot_used,
                    const std::function<void(const Assignment&)>& visit) {
  if (user == inst.num_users()) {
    visit(asg);
    return;
  }
  enumerate_from(inst, user + 1, asg, slot_used, visit);

  const std::size_t M = inst.num_subchannels();
  for (std::size_t b : inst.candidate_cells(user)) {
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t slot = b * M + m;
      if (slot_used[slot]) continue;
      slot_used[slot] = 1;
      for (std::size_t a = 0; a < inst.num_antennas(); ++a) {
        asg.activate({user, b, m, a});
        enumerate_from(inst, user + 1, asg, slot_used, visit);
        asg.deactivate_user(user);
        asg.set_antenna(user, m, 0);
      }
      slot_used[slot] = 0;
    }
  }
}

}  // namespace

double assignment_space_bound(const NetworkInstance& inst) {
  const double per_user =
      (static_cast<double>(inst.num_bs() * inst.num_subchannels()) + 1.0) *
      static_cast<double>(inst.num_antennas());
  return std::pow(per_user, static_cast<double>(inst.num_users()));
}

void for_each_assignment(const NetworkInstance& inst,
                         const std::function<void(const Assignment&)>& visit) {
  const double bound = assignment_space_bound(inst);
  if (bound > kMaxAssignments) {
    throw GuardError("assignment enumeration too large: bound " +
                     std::to_string(bound) + " > 1e6");
  }
  Assignment asg = Assignment::empty_for(inst);
  std::vector<char> slot_used(inst.num_bs() * inst.num_subchannels(), 0);
  enumerate_from(inst, 0, asg, slot_used, visit);
}

std::vector<Assignment> enumerate_assignments(const NetworkInstance& inst) {
  std::vector<Assignment> out;
  for_each_assignment(inst, [&](const Assignment& a) { out.push_back(a); });
  return out;
}

double reference_sum_rate(const NetworkInstance& inst, const Assignment& asg,
                          const PowerAllocation& p) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  double total = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) {
          const double w = asg.s(i, b, m) * asg.x(i, m, a);
          if (w == 0.0) continue;
          double intf = 0.0;
          for (std::size_t l = 0; l < I; ++l)
            for (std::size_t bp = 0; bp < B; ++bp)
              for (std::size_t ap = 0; ap < A; ++ap) {
                if (l == i || bp == b) continue;
                intf += asg.s(l, bp, m) * asg.x(l, m, ap) * p(l, bp, m, ap) *
                        inst.gain(l, b, m, ap);
              }
          const double sinr =
              p(i, b, m, a) * inst.gain(i, b, m, a) / (inst.noise_power() + intf);
          total += w * std::log2(1.0 + sinr);
        }
  return total;
}

bool reference_feasible(const NetworkInstance& inst, const Assignment& asg,
                        const PowerAllocation& p, const SolverConfig& cfg) {
  const std::size_t I = inst.num_users();
  const std::size_t B = inst.num_bs();
  const std::size_t M = inst.num_subchannels();
  const std::size_t A = inst.num_antennas();
  const FeasibilityTolerance tol;

  for (double v : p.tensor().data()) {
    if (v < 0.0) return false;
  }
  auto is_bit = [&](double v) {
    return std::abs(v) <= tol.binary || std::abs(v - 1.0) <= tol.binary;
  };
  for (double v : asg.s_tensor().data()) {
    if (!is_bit(v)) return false;
  }
  for (double v : asg.x_tensor().data()) {
    if (!is_bit(v)) return false;
  }
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t m = 0; m < M; ++m) {
      int users = 0;
      for (std::size_t i = 0; i < I; ++i) users += asg.s(i, b, m) > 0.5;
      if (users > 1) return false;
    }
  for (std::size_t i = 0; i < I; ++i) {
    int slots = 0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m) {
        if (asg.s(i, b, m) < 0.5) continue;
        if (!inst.is_candidate(i, b)) return false;
        ++slots;
      }
    if (slots > 1) return false;
    for (std::size_t m = 0; m < M; ++m) {
      int on = 0;
      for (std::size_t a = 0; a < A; ++a) on += asg.x(i, m, a) > 0.5;
      if (on != 1) return false;
    }
  }

  // Binary from here on, so s * x is an on/off test.
  auto active = [&](std::size_t i, std::size_t b, std::size_t m, std::size_t a) {
    return b != 0 && asg.s(i, b, m) > 0.5 && asg.x(i, m, a) > 0.5;
  };
  for (std::size_t i = 0; i < I; ++i) {
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a)
          if (active(i, b, m, a)) total += p(i, b, m, a);
    if (total - cfg.p_max > tol.relative * cfg.p_max) return false;
  }
  for (std::size_t m = 0; m < M; ++m) {
    double total = 0.0;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t a = 0; a < A; ++a)
          if (active(i, b, m, a)) total += p(i, b, m, a) * inst.gain(i, 0, m, a);
    if (total - cfg.i_th > tol.relative * cfg.i_th) return false;
  }
  for (std::size_t i = 0; i < I; ++i) {
    bool scheduled = false;
    double r = 0.0;
    for (std::size_t b = 1; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) {
          if (asg.s(i, b, m) > 0.5) scheduled = true;
          if (!active(i, b, m, a)) continue;
          double intf = 0.0;
          for (std::size_t l = 0; l < I; ++l)
            for (std::size_t bp = 1; bp < B; ++bp)
              for (std::size_t ap = 0; ap < A; ++ap)
                if (l != i && bp != b && active(l, bp, m, ap))
                  intf += p(l, bp, m, ap) * inst.gain(l, b, m, ap);
          r += std::log2(1.0 + p(i, b, m, a) * inst.gain(i, b, m, a) /
                                   (inst.noise_power() + intf));
        }
    if (scheduled && cfg.r_min - r > tol.rate) return false;
  }
  return true;
}

GridResult grid_power_search(const NetworkInstance& inst, const Assignment& asg,
                             const SolverConfig& cfg, int levels) {
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  const std::vector<Tuple> tuples = asg.active_tuples();
  const std::size_t T = tuples.size();
  const double points =
      std::pow(static_cast<double>(levels) + 1.0, static_cast<double>(T));
  if (T > kMaxGridTuples || points > kMaxGridPoints) {
    throw GuardError("power grid too large: " + std::to_string(T) +
                     " tuples at " + std::to_string(levels) + " levels");
  }

  GridResult best;
  best.power = PowerAllocation(inst);

  // C5..C9 do not depend on the powers; reject the assignment once.
  for (const Violation& v : check_feasibility(inst, asg, best.power, cfg)) {
    if (v.constraint != Constraint::kC3MinRate) return best;
  }

  std::vector<double> step(T);
  for (std::size_t t = 0; t < T; ++t) {
    step[t] = tuple_power_cap(inst, tuples[t], cfg) / levels;
  }
  std::vector<int> digit(T, 0);
  PowerAllocation p(inst);
  for (;;) {
    for (std::size_t t = 0; t < T; ++t) {
      // The top level is the cap itself, not levels * step.
      p[tuples[t]] = digit[t] == levels ? tuple_power_cap(inst, tuples[t], cfg)
                                        : digit[t] * step[t];
    }
    ++best.evaluations;
    if (check_feasibility(inst, asg, p, cfg).empty()) {
      const double r = reference_sum_rate(inst, asg, p);
      if (!best.feasible || r > best.sum_rate) {
        best.feasible = true;
        best.sum_rate = r;
        best.power = p;
      }
    }
    std::size_t t = 0;
    while (t < T && digit[t] == levels) digit[t++] = 0;
    if (t == T) break;
    ++digit[t];
  }
  return best;
}

OracleResult oracle_optimum(const NetworkInstance& inst, const SolverConfig& cfg,
                            int levels) {
  OracleResult best;
  best.assignment = Assignment::empty_for(inst);
  best.power = PowerAllocation(inst);
  for_each_assignment(inst, [&](const Assignment& asg) {
    ++best.assignments;
    const GridResult g = grid_power_search(inst, asg, cfg, levels);
    best.evaluations += g.evaluations;
    if (g.feasible && g.sum_rate > best.sum_rate) {
      best.sum_rate = g.sum_rate;
      best.assignment = asg;
      best.power = g.power;
    }
  });
  return best;
}

double grid_slack(const NetworkInstance& inst, const Assignment& asg,
                  const PowerAllocation& p, const SolverConfig& cfg,
                  int levels) {
  const std::vector<Tuple> tuples = asg.active_tuples();
  if (tuples.empty()) return 0.0;
  PowerAllocation corner = p;
  std::vector<double> step(tuples.size());
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    step[t] = tuple_power_cap(inst, tuples[t], cfg) / levels;
    corner[tuples[t]] =
        step[t] > 0.0 ? std::floor(p[tuples[t]] / step[t]) * step[t] : 0.0;
  }
  const ActiveRates at_p = active_rate_and_grad(inst, asg, p);
  const ActiveRates at_corner = active_rate_and_grad(inst, asg, corner);
  double slack = 0.0;
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    slack += step[t] * std::max(std::abs(at_p.gradient[t]),
                                std::abs(at_corner.gradient[t]));
  }
  return slack;
}

}  // namespace hetnet
