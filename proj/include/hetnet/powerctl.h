#ifndef HETNET_POWERCTL_H_
#define HETNET_POWERCTL_H_

// Power control for a fixed binary assignment: maximize the small-cell sum
// rate over the powers of the active tuples subject to the per-user budget
// (C1), the per-sub-channel cross-tier budget (C2) and the minimum rate of
// scheduled users (C3), with the augmented Lagrangian of alm.h.
//
// Constraint functions are dimensionless: C1 is sum p / p_max - 1, C2 is
// sum p h0 / I_th - 1 and C3 is R_min - R_i (bps/Hz).

#include <cstddef>
#include <vector>

#include "hetnet/alm.h"
#include "hetnet/model.h"

namespace hetnet {

struct PowerMultipliers {
  std::vector<double> lambda;  // C1, per user
  std::vector<double> theta;   // C2, per sub-channel
  std::vector<double> phi;     // C3, per user (zero for unscheduled users)
  double psi = 1.0;

  static PowerMultipliers zeros(const NetworkInstance& inst, double psi);
};

struct ActiveRates {
  std::vector<Tuple> tuples;    // active small-cell tuples of the assignment
  std::vector<double> rates;    // bps/Hz per tuple
  std::vector<double> gradient; // d(sum rate)/dp per tuple, per watt
};

ActiveRates active_rate_and_grad(const NetworkInstance& inst,
                                 const Assignment& asg,
                                 const PowerAllocation& p);

// Sum rate minus the penalty terms of every constraint family, evaluated on
// the active tuples of `asg` (other entries of p are ignored).
double power_augmented_value(const NetworkInstance& inst, const Assignment& asg,
                             const PowerAllocation& p,
                             const PowerMultipliers& pm,
                             const SolverConfig& cfg);

// Gradient of power_augmented_value per active tuple (ActiveRates order),
// per watt.
std::vector<double> power_augmented_gradient(const NetworkInstance& inst,
                                             const Assignment& asg,
                                             const PowerAllocation& p,
                                             const PowerMultipliers& pm,
                                             const SolverConfig& cfg);

// Upper bound on a single tuple's power: min(p_max, I_th / h0).
double tuple_power_cap(const NetworkInstance& inst, const Tuple& t,
                       const SolverConfig& cfg);

struct PowerControlResult {
  PowerAllocation power;
  PowerMultipliers multipliers;
  std::vector<alm::Iterate> trace;
  int alm_iterations = 0;
  bool converged = false;
  // Some scheduled user ends below R_min; qos_users_infeasible lists users
  // that cannot reach R_min even alone at their power cap.
  bool qos_infeasible = false;
  std::vector<std::size_t> qos_users_infeasible;
  double c3_residual = 0.0;  // max_i (R_min - R_i)_+ over scheduled users
};

// Starts from p0 (projected onto the box), inactive tuples stay exactly 0.
// Returned powers satisfy C1 and C2 exactly (a final uniform rescale removes
// the ALM's residual violation).
PowerControlResult alm_power_control(const NetworkInstance& inst,
                                     const Assignment& asg,
                                     const PowerAllocation& p0,
                                     const SolverConfig& cfg);

}  // namespace hetnet

#endif  // HETNET_POWERCTL_H_
