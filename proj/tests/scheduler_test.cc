#include "hetnet/scheduler.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hetnet/oracle.h"
#include "test_util.h"

namespace hetnet {
namespace {

using testing::make_instance;
using testing::small_drop;

std::vector<double> random_relaxed(const VariableLayout& L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> z(L.size());
  for (double& v : z) v = U(rng);
  return z;
}

// Cross-tier load of sub-channel m for a relaxed point, scaled like the
// surrogate constraint.
double true_c2(const NetworkInstance& inst, const VariableLayout& L,
               std::span<const double> z, const PowerAllocation& probe,
               const SolverConfig& cfg, std::size_t m) {
  double load = 0.0;
  for (std::size_t i = 0; i < inst.num_users(); ++i)
    for (std::size_t b = 1; b < inst.num_bs(); ++b)
      for (std::size_t a = 0; a < inst.num_antennas(); ++a)
        load += z[L.s_index(i, b, m)] * z[L.x_index(i, m, a)] * probe(i, b, m, a) *
                inst.macro_gain(i, m, a);
  return load / cfg.i_th - 1.0;
}

TEST(Layout, RoundTrip) {
  const NetworkInstance inst = small_drop(1);
  const VariableLayout L(inst);
  std::mt19937_64 rng(1);
  const auto z = random_relaxed(L, rng);
  EXPECT_EQ(L.flatten(L.unflatten(z)), z);
  EXPECT_EQ(L.size(), 4u * 2 * 3 + 4u * 3 * 2);
  EXPECT_EQ(L.s_index(1, 2, 0), 1u * 6 + 3);
  EXPECT_EQ(L.x_index(0, 1, 1), 24u + 3);
}

TEST(RateCoefficients, ZeroPowerGivesZero) {
  const NetworkInstance inst = small_drop(2);
  const RateCoefficients rc =
      rate_coefficients(inst, Assignment::empty_for(inst), PowerAllocation(inst));
  EXPECT_EQ(rc.max(), 0.0);
}

TEST(RateCoefficients, SingleUserIsInterferenceFree) {
  const NetworkInstance inst = small_drop(2, 2, 1, 2, 2);
  const PowerAllocation p(inst, 0.1);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  const RateCoefficients rc = rate_coefficients(inst, asg, p);
  for (std::size_t b = 1; b < inst.num_bs(); ++b)
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t a = 0; a < 2; ++a)
        EXPECT_DOUBLE_EQ(rc.rbar(0, b, m, a),
                         std::log2(1.0 + 0.1 * inst.gain(0, b, m, a) / inst.noise_power()));
}

TEST(RateCoefficients, MatchesModelRateOnActiveTuples) {
  const NetworkInstance inst = small_drop(3, 2, 4, 2, 2);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  asg.activate({1, 2, 0, 1});
  asg.activate({2, 1, 1, 0});
  asg.activate({3, 2, 1, 1});
  PowerAllocation p(inst, 0.07);
  const RateCoefficients rc = rate_coefficients(inst, asg, p);
  for (const Tuple& t : asg.active_tuples()) {
    EXPECT_NEAR(rc.rbar(t.user, t.bs, t.subchannel, t.antenna),
                rate(inst, asg, p, t.user, t.bs, t.subchannel, t.antenna), 1e-12);
  }
}

TEST(PenalizedObjective, BinaryAndHalf) {
  const NetworkInstance inst = small_drop(4);
  const PowerAllocation p(inst, 0.05);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 1});
  asg.activate({2, 2, 1, 0});
  const RateCoefficients rc = rate_coefficients(inst, asg, p);
  EXPECT_NEAR(penalized_objective(asg, rc, 7.0, 3.0),
              rc.rbar(0, 1, 0, 1) + rc.rbar(2, 2, 1, 0), 1e-12);

  RateCoefficients zero = rc;
  for (double& v : zero.rbar.data()) v = 0.0;
  Assignment half(inst.num_users(), inst.num_bs(), inst.num_subchannels(),
                  inst.num_antennas(), true);
  for (std::size_t i = 0; i < inst.num_users(); ++i)
    for (std::size_t b = 0; b < inst.num_bs(); ++b)
      for (std::size_t m = 0; m < inst.num_subchannels(); ++m) half.s(i, b, m) = 0.5;
  for (std::size_t i = 0; i < inst.num_users(); ++i)
    for (std::size_t m = 0; m < inst.num_subchannels(); ++m)
      for (std::size_t a = 0; a < inst.num_antennas(); ++a) half.x(i, m, a) = 0.5;
  const double ns = 4.0 * 3 * 3, nx = 4.0 * 3 * 2;
  EXPECT_NEAR(penalized_objective(half, zero, 2.0, 5.0), -(2.0 * ns + 5.0 * nx) / 4.0, 1e-12);
}

TEST(PenalizedObjective, RandomPointMatchesDirectSum) {
  const NetworkInstance inst = small_drop(6, 2, 2, 2, 2);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst),
                                                PowerAllocation(inst, 0.1));
  const VariableLayout L(inst);
  std::mt19937_64 rng(6);
  const auto z = random_relaxed(L, rng);
  double expect = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t b = 1; b < 3; ++b)
      for (std::size_t m = 0; m < 2; ++m) {
        const double s = z[L.s_index(i, b, m)];
        expect -= 1.5 * (s - s * s);
        for (std::size_t a = 0; a < 2; ++a)
          expect += rc.rbar(i, b, m, a) * s * z[L.x_index(i, m, a)];
      }
  for (std::size_t k = L.num_s(); k < L.size(); ++k) expect -= 0.5 * (z[k] - z[k] * z[k]);
  EXPECT_NEAR(penalized_objective(L.unflatten(z), rc, 1.5, 0.5), expect, 1e-10);
}

TEST(Surrogate, TangentMinorantAndConcave) {
  std::mt19937_64 rng(8);
  SolverConfig cfg;
  for (std::uint64_t seed : {1, 2, 3}) {
    const NetworkInstance inst = small_drop(seed);
    const PowerAllocation probe(inst, 0.05);
    const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
    const VariableLayout L(inst);
    const double mu_s = 0.7 * rc.max(), mu_x = 0.3 * rc.max();
    const auto z0 = random_relaxed(L, rng);
    const SurrogateProblem sp =
        build_surrogate(L.unflatten(z0), rc, mu_s, mu_x, inst, probe, cfg, {});
    const double p0 = penalized_objective(L.unflatten(z0), rc, mu_s, mu_x);
    EXPECT_NEAR(sp.value(z0), p0, 1e-9 * std::max(1.0, std::abs(p0)));
    for (double c : sp.curvature) EXPECT_GE(c, 0.0);
    int violations = 0;
    for (int k = 0; k < 1000; ++k) {
      const auto z = random_relaxed(L, rng);
      const double p = penalized_objective(L.unflatten(z), rc, mu_s, mu_x);
      if (sp.value(z) > p + 1e-9 * std::max(1.0, std::abs(p))) ++violations;
    }
    EXPECT_EQ(violations, 0) << "seed " << seed;
  }
}

TEST(Surrogate, ConvexifiedCrossTierIsConservative) {
  std::mt19937_64 rng(9);
  SolverConfig cfg;
  cfg.i_th = 1e-13;  // tight enough that C2 terms are present
  const NetworkInstance inst = small_drop(12);
  const PowerAllocation probe(inst, 0.1);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  const VariableLayout L(inst);
  const auto z0 = random_relaxed(L, rng);
  const SurrogateProblem sp = build_surrogate(L.unflatten(z0), rc, 1.0, 1.0, inst, probe, cfg, {});
  int seen = 0;
  for (const QuadraticConstraint& g : sp.constraints) {
    if (g.kind != Constraint::kC2CrossTier) continue;
    ++seen;
    EXPECT_NEAR(g.value(z0), true_c2(inst, L, z0, probe, cfg, g.index), 1e-9);
    for (int k = 0; k < 200; ++k) {
      const auto z = random_relaxed(L, rng);
      EXPECT_GE(g.value(z) + 1e-9, true_c2(inst, L, z, probe, cfg, g.index));
    }
  }
  EXPECT_EQ(seen, 3);
}

TEST(Surrogate, ZeroRatesGiveBinaryMaximizer) {
  const NetworkInstance inst = small_drop(13);
  const PowerAllocation probe(inst, 0.05);
  RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  for (double& v : rc.rbar.data()) v = 0.0;
  const VariableLayout L(inst);
  std::mt19937_64 rng(10);
  const auto z0 = random_relaxed(L, rng);
  SolverConfig cfg;
  cfg.i_th = 1.0;
  const SurrogateProblem sp = build_surrogate(L.unflatten(z0), rc, 1.0, 1.0, inst, probe, cfg, {});
  std::vector<double> lambda(sp.constraints.size(), 0.0);
  const auto start = L.flatten(Assignment::empty_for(inst));
  const SurrogateSolution sol = solve_surrogate(sp, start, lambda, cfg);
  for (double v : sol.z) EXPECT_NEAR(v, std::round(v), 1e-9);
}

TEST(LinearOracle, UniqueBestTupleAndContestedSlot) {
  auto g = [](std::size_t, std::size_t, std::size_t, std::size_t) { return 1e-10; };
  const NetworkInstance inst = make_instance(2, 2, 1, 2, g, 1e-13);
  SolverConfig cfg;
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst),
                                                PowerAllocation(inst, 0.1));
  const SurrogateProblem sp = build_surrogate(Assignment::empty_for(inst), rc, 0.0, 0.0, inst,
                                              PowerAllocation(inst, 0.1), cfg, {});
  const VariableLayout& L = sp.layout;
  std::vector<double> grad(L.size(), 0.0);
  grad[L.s_index(0, 1, 0)] = 1.0;
  grad[L.s_index(1, 1, 0)] = 2.0;
  grad[L.x_index(0, 0, 1)] = 0.5;
  grad[L.x_index(1, 0, 0)] = 0.5;
  const auto v = linear_oracle(sp, grad);
  EXPECT_EQ(v[L.s_index(1, 1, 0)], 1.0);
  EXPECT_EQ(v[L.s_index(0, 1, 0)], 0.0);
  EXPECT_EQ(v[L.x_index(0, 0, 1)], 1.0);
  EXPECT_EQ(v[L.x_index(1, 0, 0)], 1.0);
}

TEST(SolveSurrogate, MatchesDenseGrid) {
  // One user, one small cell, two sub-channels, two antennas: 6 variables,
  // parametrised by (s0, s1) on the simplex and x(m, 0) = t_m.
  const NetworkInstance inst = small_drop(21, 1, 1, 2, 2);
  SolverConfig cfg;
  cfg.i_th = 1.0;
  cfg.r_min = 0.0;
  cfg.fw_max_iter = 5000;
  cfg.fw_gap_tol = 1e-9;
  const PowerAllocation probe(inst, 0.05);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  const VariableLayout L(inst);
  std::mt19937_64 rng(3);
  const auto z0 = random_relaxed(L, rng);
  const double mu = 0.3 * rc.max();
  const SurrogateProblem sp = build_surrogate(L.unflatten(z0), rc, mu, mu, inst, probe, cfg, {});
  std::vector<double> lambda(sp.constraints.size(), 0.0);
  std::vector<double> start(L.size(), 0.0);
  for (std::size_t m = 0; m < 2; ++m) start[L.x_index(0, m, 0)] = 1.0;
  const SurrogateSolution sol = solve_surrogate(sp, start, lambda, cfg);

  const int n = 40;
  double best = -1e300;
  std::vector<double> z(L.size());
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      for (int c = 0; c <= n; ++c)
        for (int d = 0; d <= n; ++d) {
          z[L.s_index(0, 1, 0)] = double(a) / n;
          z[L.s_index(0, 1, 1)] = double(b) / n;
          z[L.x_index(0, 0, 0)] = double(c) / n;
          z[L.x_index(0, 0, 1)] = 1.0 - double(c) / n;
          z[L.x_index(0, 1, 0)] = double(d) / n;
          z[L.x_index(0, 1, 1)] = 1.0 - double(d) / n;
          best = std::max(best, sp.value(z));
        }
  EXPECT_GE(sp.value(sol.z), best - 1e-4);
}

TEST(MmSchedule, SingleUserPicksStrongerAntenna) {
  auto g = [](std::size_t, std::size_t b, std::size_t, std::size_t a) {
    if (b == 0) return 1e-16;
    return a == 0 ? 2e-10 : 1e-10;
  };
  const NetworkInstance inst = make_instance(2, 1, 1, 2, g, 1e-13);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  const ScheduleResult r =
      mm_schedule(inst, Assignment::empty_for(inst), PowerAllocation(inst, 0.1), cfg);
  const auto t = r.assignment.active_tuples();
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (Tuple{0, 1, 0, 0}));
}

TEST(MmSchedule, ZeroPenaltySingleUserIsArgmax) {
  const NetworkInstance inst = small_drop(31, 3, 1, 4, 2);
  SolverConfig cfg;
  cfg.mu1 = cfg.mu2 = 0.0;
  cfg.r_min = 0.0;
  cfg.i_th = 1.0;
  const PowerAllocation probe(inst, 0.1);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  Tuple best{0, 1, 0, 0};
  for (std::size_t b = 1; b < 4; ++b)
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t a = 0; a < 2; ++a)
        if (rc.rbar(0, b, m, a) > rc.rbar(0, best.bs, best.subchannel, best.antenna))
          best = {0, b, m, a};
  const ScheduleResult r = mm_schedule(inst, Assignment::empty_for(inst), probe, cfg);
  ASSERT_EQ(r.assignment.active_tuples().size(), 1u);
  EXPECT_EQ(r.assignment.active_tuples()[0], best);
}

TEST(MmSchedule, AscentBinaryAndFeasible) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const NetworkInstance inst = testing::default_drop(seed);
    SolverConfig cfg;
    cfg.r_min = 0.0;
    const PowerAllocation probe(inst, cfg.p_max / 8);
    const ScheduleResult r = mm_schedule(inst, Assignment::empty_for(inst), probe, cfg);
    EXPECT_LE(r.binariness_gap, 1e-3) << "seed " << seed;
    for (const MmIterate& it : r.trace) {
      if (it.accepted && it.max_violation <= 1e-9) {
        EXPECT_GE(it.p_after, it.p_before - 1e-9 * std::max(1.0, std::abs(it.p_before)));
      }
    }
    PowerAllocation on_active(inst);
    for (const Tuple& t : r.assignment.active_tuples()) on_active[t] = probe[t];
    for (const Violation& v : check_feasibility(inst, r.assignment, on_active, cfg)) {
      ADD_FAILURE() << "seed " << seed << " violates " << to_string(v.constraint);
    }
  }
}

TEST(MmSchedule, CloseToEnumerationAtFrozenPower) {
  SolverConfig cfg;
  cfg.r_min = 0.0;
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const NetworkInstance inst = small_drop(seed, 2, 2, 2, 2);
    const PowerAllocation probe(inst, 0.1);
    const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
    auto score = [&](const Assignment& a) {
      double v = 0.0;
      for (const Tuple& t : a.active_tuples()) v += rc.rbar(t.user, t.bs, t.subchannel, t.antenna);
      return v;
    };
    double best = 0.0;
    for (const Assignment& a : enumerate_assignments(inst)) {
      PowerAllocation on_active(inst);
      for (const Tuple& t : a.active_tuples()) on_active[t] = probe[t];
      bool ok = true;
      for (const Violation& v : check_feasibility(inst, a, on_active, cfg)) {
        ok &= v.constraint == Constraint::kC3MinRate;
      }
      if (ok) best = std::max(best, score(a));
    }
    const ScheduleResult r = mm_schedule(inst, Assignment::empty_for(inst), probe, cfg);
    const double got = score(r.assignment);
    EXPECT_LE(got, best + 1e-9);
    EXPECT_GE(got, 0.9 * best) << "seed " << seed;
    ++compared;
  }
  EXPECT_EQ(compared, 10);
}

TEST(RoundAssignment, IdentityOnFeasibleBinary) {
  const NetworkInstance inst = small_drop(40);
  SolverConfig cfg;
  cfg.i_th = 1.0;
  const PowerAllocation probe(inst, 0.05);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 1});
  asg.activate({1, 2, 2, 0});
  const VariableLayout L(inst);
  EXPECT_EQ(round_assignment(L.unflatten(L.flatten(asg)), inst, rc, probe, cfg).active_tuples(),
            asg.active_tuples());
}

TEST(RoundAssignment, LargerShareWinsSlot) {
  const NetworkInstance inst = small_drop(41, 1, 2, 1, 1);
  SolverConfig cfg;
  cfg.i_th = 1.0;
  const PowerAllocation probe(inst, 0.05);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  const VariableLayout L(inst);
  std::vector<double> z(L.size(), 0.0);
  z[L.s_index(0, 1, 0)] = 0.4;
  z[L.s_index(1, 1, 0)] = 0.6;
  z[L.x_index(0, 0, 0)] = z[L.x_index(1, 0, 0)] = 1.0;
  const auto t = round_assignment(L.unflatten(z), inst, rc, probe, cfg).active_tuples();
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].user, 1u);
}

TEST(RoundAssignment, RandomRelaxedAlwaysFeasible) {
  std::mt19937_64 rng(77);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  cfg.i_th = 1e-13;
  for (int k = 0; k < 100; ++k) {
    const NetworkInstance inst = small_drop(50 + k % 5);
    PowerAllocation probe(inst);
    std::uniform_real_distribution<double> U(0.0, 0.3);
    for (double& v : probe.tensor().data()) v = U(rng);
    const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
    const VariableLayout L(inst);
    const Assignment a = round_assignment(L.unflatten(random_relaxed(L, rng)), inst, rc, probe, cfg);
    PowerAllocation on_active(inst);
    for (const Tuple& t : a.active_tuples()) on_active[t] = probe[t];
    EXPECT_TRUE(check_feasibility(inst, a, on_active, cfg).empty()) << "draw " << k;
  }
}

TEST(RoundAssignment, InvariantUnderRateScaling) {
  std::mt19937_64 rng(5);
  const NetworkInstance inst = small_drop(60);
  SolverConfig cfg;
  cfg.i_th = 1.0;
  const PowerAllocation probe(inst, 0.05);
  const RateCoefficients rc = rate_coefficients(inst, Assignment::empty_for(inst), probe);
  RateCoefficients scaled = rc;
  for (double& v : scaled.rbar.data()) v *= 3.5;
  const VariableLayout L(inst);
  const Assignment z = L.unflatten(random_relaxed(L, rng));
  EXPECT_EQ(round_assignment(z, inst, rc, probe, cfg).active_tuples(),
            round_assignment(z, inst, scaled, probe, cfg).active_tuples());
}

}  // namespace
}  // namespace hetnet
