#include "hetnet/model.h"

#include <gtest/gtest.h>

#include <random>

#include "hetnet/oracle.h"
#include "test_util.h"

namespace hetnet {
namespace {

using testing::make_instance;

// Two users on two small cells sharing sub-channel 0. Reference values from
// a 30-digit evaluation of the rate expression.
struct TwoCellFixture {
  NetworkInstance inst;
  Assignment asg;
  PowerAllocation p;

  TwoCellFixture() {
    auto g = [](std::size_t u, std::size_t b, std::size_t, std::size_t) {
      static const double table[2][3] = {{1e-12, 2e-10, 3e-11},
                                         {1e-12, 5e-11, 4e-10}};
      return table[u][b];
    };
    inst = make_instance(3, 2, 1, 1, g, 1e-13);
    asg = Assignment::empty_for(inst);
    asg.activate({0, 1, 0, 0});
    asg.activate({1, 2, 0, 0});
    p = PowerAllocation(inst);
    p(0, 1, 0, 0) = 0.1;
    p(1, 2, 0, 0) = 0.05;
  }
};

TEST(Interference, HandFixture) {
  TwoCellFixture f;
  EXPECT_NEAR(interference(f.inst, f.asg, f.p, 1, 0, 0), 2.5e-12, 1e-24);
  EXPECT_NEAR(interference(f.inst, f.asg, f.p, 2, 0, 1), 3.0e-12, 1e-24);
}

TEST(Interference, SingleUserAndZeroPower) {
  TwoCellFixture f;
  Assignment one = Assignment::empty_for(f.inst);
  one.activate({0, 1, 0, 0});
  EXPECT_EQ(interference(f.inst, one, f.p, 1, 0, 0), 0.0);
  EXPECT_EQ(interference(f.inst, f.asg, PowerAllocation(f.inst), 1, 0, 0), 0.0);
}

TEST(Interference, RangeError) {
  TwoCellFixture f;
  EXPECT_THROW(interference(f.inst, f.asg, f.p, 3, 0, 0), std::out_of_range);
  EXPECT_THROW(interference(f.inst, f.asg, f.p, 1, 1, 0), std::out_of_range);
  EXPECT_THROW(interference(f.inst, f.asg, f.p, 1, 0, 2), std::out_of_range);
}

TEST(Interference, LinearInInterfererPower) {
  TwoCellFixture f;
  const double base = interference(f.inst, f.asg, f.p, 1, 0, 0);
  f.p(1, 2, 0, 0) *= 2.0;
  EXPECT_DOUBLE_EQ(interference(f.inst, f.asg, f.p, 1, 0, 0), 2.0 * base);
}

TEST(Rate, HandFixture) {
  TwoCellFixture f;
  EXPECT_NEAR(rate(f.inst, f.asg, f.p, 0, 1, 0, 0), 3.11973924427409554792, 1e-12);
  EXPECT_NEAR(rate(f.inst, f.asg, f.p, 1, 2, 0, 0), 2.89755273102918233629, 1e-12);
  EXPECT_NEAR(sum_rate(f.inst, f.asg, f.p), 6.01729197530327788421, 1e-12);
}

TEST(Rate, ZeroPowerAndUnitSnr) {
  auto g = [](std::size_t, std::size_t, std::size_t, std::size_t) { return 1e-10; };
  const NetworkInstance inst = make_instance(2, 1, 1, 1, g, 1e-13);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  PowerAllocation p(inst);
  EXPECT_EQ(rate(inst, asg, p, 0, 1, 0, 0), 0.0);
  p(0, 1, 0, 0) = 1e-3;  // p * gain = noise
  EXPECT_DOUBLE_EQ(rate(inst, asg, p, 0, 1, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sum_rate(inst, asg, p), 1.0);
}

TEST(Rate, MonotoneInOwnAndInterfererPower) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 0.2);
  TwoCellFixture f;
  for (int k = 0; k < 200; ++k) {
    f.p(0, 1, 0, 0) = U(rng);
    f.p(1, 2, 0, 0) = U(rng);
    const double r = rate(f.inst, f.asg, f.p, 0, 1, 0, 0);
    PowerAllocation up = f.p;
    up(0, 1, 0, 0) += 0.01;
    EXPECT_GE(rate(f.inst, f.asg, up, 0, 1, 0, 0), r);
    PowerAllocation loud = f.p;
    loud(1, 2, 0, 0) += 0.01;
    EXPECT_LE(rate(f.inst, f.asg, loud, 0, 1, 0, 0), r);
  }
}

TEST(SumRate, EmptyAssignmentIsZero) {
  const NetworkInstance inst = testing::small_drop(5);
  EXPECT_EQ(sum_rate(inst, Assignment::empty_for(inst), PowerAllocation(inst, 0.1)), 0.0);
}

TEST(SumRate, RejectsRelaxed) {
  const NetworkInstance inst = testing::small_drop(5);
  Assignment relaxed(inst.num_users(), inst.num_bs(), inst.num_subchannels(),
                     inst.num_antennas(), true);
  EXPECT_THROW(sum_rate(inst, relaxed, PowerAllocation(inst)), std::logic_error);
}

TEST(SumRate, MatchesReferenceOnEnumeratedAssignments) {
  const NetworkInstance inst = testing::small_drop(11, 2, 2, 2, 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 0.2);
  for (const Assignment& asg : enumerate_assignments(inst)) {
    PowerAllocation p(inst);
    for (double& v : p.tensor().data()) v = U(rng);
    const double a = sum_rate(inst, asg, p);
    EXPECT_NEAR(a, reference_sum_rate(inst, asg, p), 1e-12 * (1.0 + a));
  }
}

TEST(SumRate, InvariantUnderUserPermutation) {
  const NetworkInstance inst = testing::small_drop(2, 2, 3, 2, 2);
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 1});
  asg.activate({1, 2, 0, 0});
  asg.activate({2, 1, 1, 0});
  PowerAllocation p(inst, 0.05);

  // Users reversed: u -> 2 - u in every tensor.
  const std::size_t I = 3, B = inst.num_bs(), M = 2, A = 2;
  std::vector<double> gain;
  for (std::size_t u = 0; u < I; ++u)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) gain.push_back(inst.gain(I - 1 - u, b, m, a));
  const NetworkInstance rev(B, I, M, A, gain, inst.noise_power());
  Assignment asg_rev = Assignment::empty_for(rev);
  asg_rev.activate({2, 1, 0, 1});
  asg_rev.activate({1, 2, 0, 0});
  asg_rev.activate({0, 1, 1, 0});
  EXPECT_NEAR(sum_rate(inst, asg, p), sum_rate(rev, asg_rev, p), 1e-12);
}

TEST(Feasibility, EmptyIsFeasible) {
  const NetworkInstance inst = testing::small_drop(1);
  EXPECT_TRUE(check_feasibility(inst, Assignment::empty_for(inst), PowerAllocation(inst),
                                SolverConfig{})
                  .empty());
}

TEST(Feasibility, SingleC1Violation) {
  auto g = [](std::size_t, std::size_t b, std::size_t, std::size_t) {
    return b == 0 ? 1e-16 : 1e-9;
  };
  const NetworkInstance inst = make_instance(2, 1, 1, 1, g, 1e-15);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  PowerAllocation p(inst);
  p(0, 1, 0, 0) = cfg.p_max + 0.01;
  const auto v = check_feasibility(inst, asg, p, cfg);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, Constraint::kC1PowerBudget);
  EXPECT_EQ(v[0].index, 0u);
  EXPECT_NEAR(v[0].excess, 0.01, 1e-15);
}

TEST(Feasibility, MacroAssociationIsC6) {
  const NetworkInstance inst = testing::small_drop(1);
  Assignment asg = Assignment::empty_for(inst);
  asg.s(0, 0, 0) = 1.0;
  SolverConfig cfg;
  cfg.r_min = 0.0;
  bool found = false;
  for (const auto& v : check_feasibility(inst, asg, PowerAllocation(inst), cfg)) {
    found |= v.constraint == Constraint::kC6SingleAssociation;
  }
  EXPECT_TRUE(found);
}

TEST(Feasibility, AgreesWithReferenceOnRandomDraws) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int feasible = 0;
  for (int k = 0; k < 1000; ++k) {
    const NetworkInstance inst = testing::small_drop(100 + k % 10, 2, 2, 2, 2);
    SolverConfig cfg;
    cfg.r_min = U(rng) < 0.5 ? 0.0 : 4.0 * U(rng);
    cfg.i_th = std::pow(10.0, -15.0 + 5.0 * U(rng));
    Assignment asg = Assignment::empty_for(inst);
    for (std::size_t i = 0; i < 2; ++i) {
      if (U(rng) < 0.3) continue;
      asg.activate({i, 1 + static_cast<std::size_t>(U(rng) * 2),
                    static_cast<std::size_t>(U(rng) * 2),
                    static_cast<std::size_t>(U(rng) * 2)});
    }
    if (U(rng) < 0.1) asg.s(0, 0, 1) = 1.0;  // macro association
    if (U(rng) < 0.1) asg.x(1, 1, 0) = asg.x(1, 1, 1) = 1.0;
    PowerAllocation p(inst);
    for (double& v : p.tensor().data()) v = 0.3 * U(rng) - (U(rng) < 0.02 ? 0.5 : 0.0);
    const bool expect = reference_feasible(inst, asg, p, cfg);
    feasible += expect;
    EXPECT_EQ(check_feasibility(inst, asg, p, cfg).empty(), expect) << "draw " << k;
  }
  EXPECT_GT(feasible, 50);
  EXPECT_LT(feasible, 950);
}

TEST(Feasibility, OracleEnumerationIsFeasible) {
  const NetworkInstance inst = testing::small_drop(7, 2, 2, 2, 2);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  for (const Assignment& asg : enumerate_assignments(inst)) {
    EXPECT_TRUE(check_feasibility(inst, asg, PowerAllocation(inst), cfg).empty());
  }
}

TEST(Assignment, ActiveTuplesAndSlots) {
  Assignment asg(2, 3, 2, 2);
  asg.activate({1, 2, 1, 1});
  const auto t = asg.active_tuples();
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (Tuple{1, 2, 1, 1}));
  EXPECT_EQ(asg.slot_of(1), std::make_optional(std::pair<std::size_t, std::size_t>{2, 1}));
  EXPECT_FALSE(asg.scheduled(0));
  asg.deactivate_user(1);
  EXPECT_TRUE(asg.active_tuples().empty());
  EXPECT_EQ(asg.binariness_gap(), 0.0);
}

TEST(SolverConfig, Validate) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eps_outer = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.p_max = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(NetworkInstance, RejectsBadData) {
  EXPECT_THROW(NetworkInstance(2, 1, 1, 1, {1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(NetworkInstance(2, 1, 1, 1, {1.0, -1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(NetworkInstance(2, 1, 1, 1, {1.0, 1.0}, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace hetnet
