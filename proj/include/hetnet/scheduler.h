#ifndef HETNET_SCHEDULER_H_
#define HETNET_SCHEDULER_H_

// Joint user association, sub-channel assignment and antenna selection for
// frozen powers. The binary program is relaxed to [0,1] with the penalties
// mu_s * sum(s - s^2) + mu_x * sum(x - x^2), written as a difference of
// convex functions u - v and solved by minorize-maximize: each step
// maximizes the concave minorant u(z0) + grad u(z0)'(z - z0) - v(z) over the
// assignment polytope with the cross-tier budget (and, for users served at
// z0, the minimum rate) convexified around z0.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hetnet/model.h"

namespace hetnet {

struct RateCoefficients {
  Tensor4 rbar;  // [user][bs][subchannel][antenna], zero on the macro BS

  double max() const;
};

// rbar = log2(1 + p * gain / (noise + interference)) with interference
// evaluated at (prev_asg, prev_p). prev_p may carry probe powers on tuples
// that prev_asg does not activate.
RateCoefficients rate_coefficients(const NetworkInstance& inst,
                                   const Assignment& prev_asg,
                                   const PowerAllocation& prev_p);

// sum rbar * x * s - mu_s * sum(s - s^2) - mu_x * sum(x - x^2) over every
// entry of the s and x tensors.
double penalized_objective(const Assignment& z, const RateCoefficients& rc,
                           double mu_s, double mu_x);

// Flat layout of the relaxed variables: small-cell s entries first
// (index i * K + (b - 1) * M + m, K = num_smallcells * M), then x entries
// (Ns + (i * M + m) * A + a).
class VariableLayout {
 public:
  VariableLayout() = default;
  explicit VariableLayout(const NetworkInstance& inst);

  std::size_t num_users() const { return I_; }
  std::size_t num_slots() const { return K_; }
  std::size_t num_subchannels() const { return M_; }
  std::size_t num_antennas() const { return A_; }
  std::size_t num_s() const { return I_ * K_; }
  std::size_t size() const { return I_ * K_ + I_ * M_ * A_; }

  std::size_t s_index(std::size_t i, std::size_t b, std::size_t m) const {
    return i * K_ + (b - 1) * M_ + m;
  }
  std::size_t x_index(std::size_t i, std::size_t m, std::size_t a) const {
    return I_ * K_ + (i * M_ + m) * A_ + a;
  }

  std::vector<double> flatten(const Assignment& asg) const;
  Assignment unflatten(std::span<const double> z) const;  // relaxed

 private:
  std::size_t I_ = 0, B_ = 0, K_ = 0, M_ = 0, A_ = 0;
};

// g(z) = c + sum e_k z_k + sum d_k z_k^2 + sum h (z_x + z_s)^2, convex since
// d, h >= 0.
struct QuadraticConstraint {
  struct Pair {
    std::size_t x;
    std::size_t s;
    double h;
  };
  Constraint kind = Constraint::kC2CrossTier;
  std::size_t index = 0;  // sub-channel for C2, user for C1/C3
  double c = 0.0;
  std::vector<std::pair<std::size_t, double>> linear;
  std::vector<std::pair<std::size_t, double>> square;
  std::vector<Pair> pairs;

  double value(std::span<const double> z) const;
  // grad += w * grad g(z)
  void add_gradient(std::span<const double> z, double w,
                    std::span<double> grad) const;
  // g(z + t d) = g0 + g1 t + g2 t^2
  void along(std::span<const double> z, std::span<const double> d, double& g0,
             double& g1, double& g2) const;
  // Merges repeated indices in `linear` and `square`.
  void compact();
};

// Concave surrogate S(z) = constant + sum (linear_k z_k - curvature_k z_k^2)
// with constraints g_j(z) <= 0 (scaled to be dimensionless).
struct SurrogateProblem {
  VariableLayout layout;
  AntennaMode antenna_mode = AntennaMode::kPerSubchannel;
  std::vector<double> expansion_point;
  double constant = 0.0;
  std::vector<double> linear;
  std::vector<double> curvature;  // >= 0
  std::vector<std::uint8_t> s_allowed;  // candidate mask per s variable
  std::vector<QuadraticConstraint> constraints;

  double value(std::span<const double> z) const;
  double max_violation(std::span<const double> z) const;
};

// Builds the minorant of penalized_objective at z_prev together with the
// convexified C1 (only where a probe power exceeds p_max, otherwise it is
// implied by the polytope), C2 per sub-channel and C3 for `qos_users`.
SurrogateProblem build_surrogate(const Assignment& z_prev,
                                 const RateCoefficients& rc, double mu_s,
                                 double mu_x, const NetworkInstance& inst,
                                 const PowerAllocation& probe,
                                 const SolverConfig& cfg,
                                 const std::vector<std::size_t>& qos_users);

// Linear maximization over the polytope (C5..C7, candidate cells, box):
// a max-weight matching for s and an argmax per (i, m) for x (per user
// summed over m in bulk mode).
std::vector<double> linear_oracle(const SurrogateProblem& sp,
                                  std::span<const double> grad);

struct SurrogateSolution {
  std::vector<double> z;
  int fw_iterations = 0;
  double fw_gap = 0.0;
  double max_violation = 0.0;
  // Set when a constraint stays violated after the multiplier rounds.
  std::optional<QuadraticConstraint> binding;
};

// Frank-Wolfe with exact line search on the augmented Lagrangian of the
// surrogate, `cfg.sched_alm_rounds` multiplier rounds. `lambda` (one entry
// per constraint) is used as warm start and updated in place.
SurrogateSolution solve_surrogate(const SurrogateProblem& sp,
                                  std::span<const double> start,
                                  std::vector<double>& lambda,
                                  const SolverConfig& cfg);

struct MmIterate {
  double mu_s;
  double mu_x;
  double p_before;  // penalized objective at the expansion point
  double p_after;   // at the accepted iterate (same mu)
  double max_violation;
  int fw_iterations;
  bool accepted;
};

struct ScheduleResult {
  Assignment assignment;     // binary, after rounding
  Assignment relaxed;        // last relaxed iterate
  double binariness_gap = 0.0;
  std::vector<MmIterate> trace;
  std::vector<std::size_t> dropped_qos;  // users whose C3 was unattainable
  bool fallback = false;  // rounding gave nothing, previous assignment kept
};

ScheduleResult mm_schedule(const NetworkInstance& inst,
                           const Assignment& prev_asg,
                           const PowerAllocation& prev_p,
                           const SolverConfig& cfg);

// Threshold s at 0.5, resolve C5/C6 greedily by descending rbar, pick the
// argmax antenna, then drop tuples violating C1 or C2 at the probe powers.
Assignment round_assignment(const Assignment& z, const NetworkInstance& inst,
                            const RateCoefficients& rc,
                            const PowerAllocation& probe,
                            const SolverConfig& cfg);

}  // namespace hetnet

#endif  // HETNET_SCHEDULER_H_
