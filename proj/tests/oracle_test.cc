#include "hetnet/oracle.h"

#include <gtest/gtest.h>

#include <cmath>

#include "hetnet/jpcs.h"
#include "test_util.h"

namespace hetnet {
namespace {

using testing::make_instance;
using testing::small_drop;

// Assignments of I users onto K candidate slots with A antennas each:
// sum_k C(I, k) K!/(K-k)! A^k.
double closed_form_count(int I, int K, int A) {
  double total = 0.0;
  for (int k = 0; k <= std::min(I, K); ++k) {
    double choose = 1.0, falling = 1.0;
    for (int j = 0; j < k; ++j) {
      choose = choose * (I - j) / (j + 1);
      falling *= K - j;
    }
    total += choose * falling * std::pow(A, k);
  }
  return total;
}

NetworkInstance flat(std::size_t B, std::size_t I, std::size_t M, std::size_t A) {
  return make_instance(B, I, M, A, [](auto...) { return 1e-10; }, 1e-15);
}

TEST(Enumerate, HandCounts) {
  EXPECT_EQ(enumerate_assignments(flat(2, 1, 1, 1)).size(), 2u);
  EXPECT_EQ(enumerate_assignments(flat(2, 1, 2, 2)).size(), 5u);
}

TEST(Enumerate, ClosedFormCounts) {
  EXPECT_EQ(enumerate_assignments(flat(2, 2, 2, 2)).size(), 17u);
  EXPECT_DOUBLE_EQ(closed_form_count(2, 2, 2), 17.0);
  for (auto [B, I, M, A] : {std::array<int, 4>{3, 2, 2, 2}, {3, 3, 2, 1}, {2, 3, 3, 2}}) {
    EXPECT_EQ(static_cast<double>(enumerate_assignments(flat(B, I, M, A)).size()),
              closed_form_count(I, (B - 1) * M, A));
  }
}

TEST(Enumerate, EachAssignmentOnceAndFeasible) {
  const NetworkInstance inst = flat(3, 2, 2, 2);
  const auto all = enumerate_assignments(inst);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  for (std::size_t a = 0; a < all.size(); ++a) {
    EXPECT_TRUE(check_feasibility(inst, all[a], PowerAllocation(inst), cfg).empty());
    for (std::size_t b = a + 1; b < all.size(); ++b) EXPECT_FALSE(all[a] == all[b]);
  }
}

TEST(Enumerate, GuardRefuses) {
  EXPECT_THROW(enumerate_assignments(flat(5, 6, 8, 2)), GuardError);
}

TEST(Grid, SingleUserTakesFullPower) {
  auto g = [](std::size_t, std::size_t b, std::size_t, std::size_t) {
    return b == 0 ? 1e-16 : 1e-10;
  };
  const NetworkInstance inst = make_instance(2, 1, 1, 1, g, 1e-15);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  const GridResult r = grid_power_search(inst, asg, cfg, 50);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.power(0, 1, 0, 0), cfg.p_max);
  EXPECT_EQ(r.evaluations, 51u);
}

TEST(Grid, MonotoneObjectiveEndsAtCorner) {
  // Two users on different sub-channels: no coupling, each rate monotone.
  const NetworkInstance inst = small_drop(3, 1, 2, 2, 1);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  Assignment asg = Assignment::empty_for(inst);
  asg.activate({0, 1, 0, 0});
  asg.activate({1, 1, 1, 0});
  const GridResult r = grid_power_search(inst, asg, cfg, 20);
  for (const Tuple& t : asg.active_tuples()) {
    const double cap = std::min(cfg.p_max, cfg.i_th / inst.macro_gain(t.user, t.subchannel, t.antenna));
    EXPECT_DOUBLE_EQ(r.power[t], cap);
  }
}

TEST(Grid, ResolutionsAgree) {
  SolverConfig cfg;
  cfg.r_min = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const NetworkInstance inst = small_drop(seed, 2, 2, 1, 1);
    Assignment asg = Assignment::empty_for(inst);
    asg.activate({0, 1, 0, 0});
    asg.activate({1, 2, 0, 0});
    const double coarse = grid_power_search(inst, asg, cfg, 200).sum_rate;
    const double fine = grid_power_search(inst, asg, cfg, 400).sum_rate;
    EXPECT_LE(std::abs(fine - coarse), 0.01 * fine);
  }
}

TEST(Grid, GuardRefuses) {
  const NetworkInstance inst = small_drop(1, 2, 4, 2, 1);
  Assignment asg = Assignment::empty_for(inst);
  for (std::size_t i = 0; i < 4; ++i) asg.activate({i, 1 + i % 2, i / 2, 0});
  EXPECT_THROW(grid_power_search(inst, asg, SolverConfig{}, 10), GuardError);
  Assignment three = Assignment::empty_for(inst);
  for (std::size_t i = 0; i < 3; ++i) three.activate({i, 1 + i % 2, i / 2, 0});
  EXPECT_THROW(grid_power_search(inst, three, SolverConfig{}, 300), GuardError);
}

TEST(Oracle, EmptyInstanceIsZero) {
  const NetworkInstance inst(2, 0, 1, 1, {}, 1e-15);
  EXPECT_EQ(oracle_optimum(inst, SolverConfig{}, 10).sum_rate, 0.0);
}

TEST(Oracle, SingleUserAnalyticArgmax) {
  auto g = [](std::size_t, std::size_t b, std::size_t m, std::size_t a) {
    return b == 0 ? 1e-16 : 1e-11 * (1.0 + m + 2.0 * a);
  };
  const NetworkInstance inst = make_instance(2, 1, 2, 2, g, 1e-15);
  SolverConfig cfg;
  cfg.r_min = 0.0;
  const OracleResult r = oracle_optimum(inst, cfg, 20);
  EXPECT_NEAR(r.sum_rate, std::log2(1.0 + cfg.p_max * 4e-11 / 1e-15), 1e-9);
  EXPECT_EQ(r.assignment.active_tuples()[0], (Tuple{0, 1, 1, 1}));
}

TEST(Oracle, DominatesJpcsOnTinyFixtures) {
  const SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const NetworkInstance inst = small_drop(seed, 2, 2, 2, 2);
    const OracleResult best = oracle_optimum(inst, cfg, 100);
    const AllocationReport r = run_jpcs(inst, cfg);
    const double slack = grid_slack(inst, r.assignment, r.power, cfg, 100);
    EXPECT_LE(r.sum_rate, best.sum_rate + slack) << "seed " << seed;
    EXPECT_TRUE(reference_feasible(inst, best.assignment, best.power, cfg));
  }
}

}  // namespace
}  // namespace hetnet
