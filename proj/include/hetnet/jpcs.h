#ifndef HETNET_JPCS_H_
#define HETNET_JPCS_H_

// Alternating joint power control and scheduling: schedule at frozen powers
// (scheduler.h), then optimize the powers of the new schedule (powerctl.h),
// until the sum rate settles. Also the equal-power, bulk antenna selection
// and single-antenna baselines.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hetnet/model.h"

namespace hetnet {

// Initial power p[0] on every tuple before capping and C2 scaling.
enum class InitPolicy {
  kUniform,  // p_max / M
  kFull,     // p_max
  kRandom,   // uniform in [0, p_max] per user
};

std::string to_string(InitPolicy p);
InitPolicy parse_init_policy(const std::string& name);

struct RunOptions {
  InitPolicy init = InitPolicy::kUniform;
  std::uint64_t init_seed = 1;
};

struct OuterIterate {
  int iteration;
  double sum_rate;
  int mm_iterations;
  int alm_iterations;
  std::size_t scheduled_users;
  bool accepted;
};

struct AllocationReport {
  Assignment assignment;
  PowerAllocation power;
  std::vector<double> user_rates;
  double sum_rate = 0.0;
  std::vector<Violation> violations;  // check_feasibility of the result
  // Sum rate after initialization and after every accepted outer iteration.
  std::vector<double> trace;
  std::vector<OuterIterate> iterations;
  int outer_iterations = 0;
  int mm_iterations = 0;
  int alm_iterations = 0;
  bool converged = false;
  bool qos_infeasible = false;  // some scheduled user was dropped for C3
  std::vector<std::size_t> dropped_users;
  double binariness_gap = 0.0;  // last relaxed scheduling iterate

  bool feasible() const { return violations.empty(); }
};

// Strongest-gain greedy: tuples by descending gain, each user and each
// (bs, sub-channel) used once. In bulk mode a user's antenna is shared by
// every sub-channel.
Assignment greedy_assignment(const NetworkInstance& inst, AntennaMode mode);

// Probe powers on every tuple: the policy value capped at min(p_max,
// I_th / h0), then scaled per sub-channel so that `asg` satisfies C2.
PowerAllocation initial_power(const NetworkInstance& inst,
                              const Assignment& asg, const SolverConfig& cfg,
                              const RunOptions& opts);

// p_max on every active tuple, scaled per sub-channel to meet C2.
PowerAllocation equal_power(const NetworkInstance& inst, const Assignment& asg,
                            const SolverConfig& cfg);

AllocationReport run_jpcs(const NetworkInstance& inst, const SolverConfig& cfg,
                          const RunOptions& opts = {});
AllocationReport run_epa(const NetworkInstance& inst, const SolverConfig& cfg,
                         const RunOptions& opts = {});
AllocationReport run_bulk_as(const NetworkInstance& inst,
                             const SolverConfig& cfg,
                             const RunOptions& opts = {});
AllocationReport run_single_antenna(const NetworkInstance& inst,
                                    const SolverConfig& cfg,
                                    const RunOptions& opts = {});

}  // namespace hetnet

#endif  // HETNET_JPCS_H_
