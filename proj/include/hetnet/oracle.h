#ifndef HETNET_ORACLE_H_
#define HETNET_ORACLE_H_

// Brute-force reference for tiny instances: every binary assignment times a
// uniform power grid. Used to bound heuristic results from above.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hetnet/model.h"

namespace hetnet {

// Raised instead of subsampling when an instance is too large to enumerate.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Upper bound on the enumeration size, (B M + 1)^I A^I.
double assignment_space_bound(const NetworkInstance& inst);

// Calls `visit` once for every assignment satisfying C5..C9. Unused
// (user, sub-channel) pairs carry antenna 0. Throws GuardError when
// assignment_space_bound exceeds 1e6.
void for_each_assignment(const NetworkInstance& inst,
                         const std::function<void(const Assignment&)>& visit);
std::vector<Assignment> enumerate_assignments(const NetworkInstance& inst);

// Sum rate written out with plain loops over the full index space, kept
// separate from model.cc so the two can be checked against each other.
double reference_sum_rate(const NetworkInstance& inst, const Assignment& asg,
                          const PowerAllocation& p);

// C1..C9 checked from the raw definitions with the default tolerances of
// check_feasibility.
bool reference_feasible(const NetworkInstance& inst, const Assignment& asg,
                        const PowerAllocation& p, const SolverConfig& cfg);

struct GridResult {
  PowerAllocation power;
  double sum_rate = 0.0;
  bool feasible = false;  // some grid point satisfies C1..C3
  std::size_t evaluations = 0;
};

// Grid {0, cap/levels, ..., cap} per active tuple, cap = min(p_max, I_th/h0).
// Points above cap violate C2 on their own, so the grid loses nothing by
// stopping there. At most 3 active tuples and (levels+1)^T <= 1e7.
GridResult grid_power_search(const NetworkInstance& inst, const Assignment& asg,
                             const SolverConfig& cfg, int levels);

struct OracleResult {
  Assignment assignment;
  PowerAllocation power;
  double sum_rate = 0.0;
  std::size_t assignments = 0;
  std::size_t evaluations = 0;
};

// Best grid-feasible point over all assignments. The empty assignment is
// always feasible, so the result is never below 0.
OracleResult oracle_optimum(const NetworkInstance& inst, const SolverConfig& cfg,
                            int levels);

// How much a continuous solution (asg, p) may exceed the best grid point:
// sum over active tuples of the grid step times the largest |d sum rate/dp|
// seen at p and at the grid corner below it.
double grid_slack(const NetworkInstance& inst, const Assignment& asg,
                  const PowerAllocation& p, const SolverConfig& cfg,
                  int levels);

}  // namespace hetnet

#endif  // HETNET_ORACLE_H_
