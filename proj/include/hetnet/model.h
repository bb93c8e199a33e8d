#ifndef HETNET_MODEL_H_
#define HETNET_MODEL_H_

// System model for the uplink of a two-tier OFDMA HetNet: scenario data,
// the binary scheduling variables s (user/BS/sub-channel) and x
// (user/sub-channel/antenna), transmit powers, the per-tuple rate and the
// small-cell sum rate, plus a constraint checker for C1..C9.
//
// Index conventions used throughout the library:
//   i, l  user           [0, num_users)
//   b     base station   [0, num_bs); 0 is the macro BS
//   m     sub-channel    [0, num_subchannels)
//   a     user antenna   [0, num_antennas)
// Powers are in watts, gains are linear, rates are in bps/Hz.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hetnet/tensor.h"

namespace hetnet {

inline constexpr std::size_t kMacroBs = 0;

class NetworkInstance {
 public:
  NetworkInstance() = default;

  // `gain` is laid out as [user][bs][subchannel][antenna]. When
  // `candidate_cells` is empty every small cell is a candidate for every
  // user (open access).
  NetworkInstance(std::size_t num_bs, std::size_t num_users,
                  std::size_t num_subchannels, std::size_t num_antennas,
                  std::vector<double> gain, double noise_power,
                  std::vector<std::vector<std::size_t>> candidate_cells = {});

  std::size_t num_bs() const { return num_bs_; }
  std::size_t num_smallcells() const { return num_bs_ == 0 ? 0 : num_bs_ - 1; }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_subchannels() const { return num_subchannels_; }
  std::size_t num_antennas() const { return num_antennas_; }
  double noise_power() const { return noise_power_; }

  double gain(std::size_t u, std::size_t b, std::size_t m,
              std::size_t a) const {
    return gain_(u, b, m, a);
  }
  // Cross-tier gain towards the macro BS.
  double macro_gain(std::size_t u, std::size_t m, std::size_t a) const {
    return gain_(u, kMacroBs, m, a);
  }
  const Tensor4& gains() const { return gain_; }

  const std::vector<std::size_t>& candidate_cells(std::size_t u) const {
    return candidates_.at(u);
  }
  bool is_candidate(std::size_t u, std::size_t b) const;

  // Same drop with only the first `antennas` antennas of every user.
  NetworkInstance restrict_antennas(std::size_t antennas) const;

  bool operator==(const NetworkInstance& other) const = default;

 private:
  std::size_t num_bs_ = 0;
  std::size_t num_users_ = 0;
  std::size_t num_subchannels_ = 0;
  std::size_t num_antennas_ = 0;
  Tensor4 gain_;
  double noise_power_ = 1.0;
  std::vector<std::vector<std::size_t>> candidates_;
  std::vector<std::uint8_t> candidate_mask_;  // [user][bs]
};

// One active (user, bs, subchannel, antenna) combination.
struct Tuple {
  std::size_t user;
  std::size_t bs;
  std::size_t subchannel;
  std::size_t antenna;

  bool operator==(const Tuple&) const = default;
};

class Assignment {
 public:
  Assignment() = default;
  // Binary assignments start empty with the canonical antenna 0 selected on
  // every (user, subchannel); relaxed ones start at zero.
  Assignment(std::size_t num_users, std::size_t num_bs,
             std::size_t num_subchannels, std::size_t num_antennas,
             bool relaxed = false);

  static Assignment empty_for(const NetworkInstance& inst);

  double& s(std::size_t i, std::size_t b, std::size_t m) { return s_(i, b, m); }
  double s(std::size_t i, std::size_t b, std::size_t m) const {
    return s_(i, b, m);
  }
  double& x(std::size_t i, std::size_t m, std::size_t a) { return x_(i, m, a); }
  double x(std::size_t i, std::size_t m, std::size_t a) const {
    return x_(i, m, a);
  }
  const Tensor3& s_tensor() const { return s_; }
  const Tensor3& x_tensor() const { return x_; }

  bool relaxed() const { return relaxed_; }
  void set_relaxed(bool relaxed) { relaxed_ = relaxed; }

  std::size_t num_users() const { return s_.dim(0); }
  std::size_t num_bs() const { return s_.dim(1); }
  std::size_t num_subchannels() const { return s_.dim(2); }
  std::size_t num_antennas() const { return x_.dim(2); }

  // Selects (i, b, m, a): s = 1 and x one-hot on antenna a for (i, m).
  void activate(const Tuple& t);
  // Clears every s entry of user i (x is left untouched).
  void deactivate_user(std::size_t i);
  void set_antenna(std::size_t i, std::size_t m, std::size_t a);

  // Tuples with s * x = 1, ordered by user.
  std::vector<Tuple> active_tuples() const;
  // The (bs, subchannel) slot user i occupies, if any.
  std::optional<std::pair<std::size_t, std::size_t>> slot_of(
      std::size_t i) const;
  bool scheduled(std::size_t i) const { return slot_of(i).has_value(); }

  // max over entries of |z - round(z)|.
  double binariness_gap() const;

  bool operator==(const Assignment&) const = default;

 private:
  Tensor3 s_;  // [user][bs][subchannel]
  Tensor3 x_;  // [user][subchannel][antenna]
  bool relaxed_ = false;
};

class PowerAllocation {
 public:
  PowerAllocation() = default;
  explicit PowerAllocation(const NetworkInstance& inst, double fill = 0.0);
  PowerAllocation(std::size_t num_users, std::size_t num_bs,
                  std::size_t num_subchannels, std::size_t num_antennas,
                  double fill = 0.0);

  double& operator()(std::size_t i, std::size_t b, std::size_t m,
                     std::size_t a) {
    return p_(i, b, m, a);
  }
  double operator()(std::size_t i, std::size_t b, std::size_t m,
                    std::size_t a) const {
    return p_(i, b, m, a);
  }
  double& operator[](const Tuple& t) {
    return p_(t.user, t.bs, t.subchannel, t.antenna);
  }
  double operator[](const Tuple& t) const {
    return p_(t.user, t.bs, t.subchannel, t.antenna);
  }
  const Tensor4& tensor() const { return p_; }
  Tensor4& tensor() { return p_; }

  bool operator==(const PowerAllocation&) const = default;

 private:
  Tensor4 p_;  // [user][bs][subchannel][antenna], watts
};

enum class AntennaMode {
  kPerSubchannel,  // one antenna per (user, sub-channel)
  kBulk,           // one antenna per user across all sub-channels
};

struct SolverConfig {
  // Problem data.
  double p_max = 0.19952623149688797;  // 23 dBm
  double i_th = 1e-12;                 // -90 dBm per sub-channel
  double r_min = 5.0;                  // bps/Hz

  // Binariness penalties. With `mu_relative` the effective weights are
  // mu * max(rate coefficient) of the scheduling subproblem.
  double mu1 = 10.0;  // on s
  double mu2 = 10.0;  // on x
  bool mu_relative = true;
  // Penalty continuation inside the scheduler: weights ramp from
  // mu_start (same units as mu1/mu2) by mu_growth per MM iteration.
  double mu_start = 1e-3;
  double mu_growth = 4.0;

  // ALM power control.
  double psi0 = 1.0;
  double psi_cap = 1048576.0;  // 2^20

  double eps_outer = 0.1;   // sum-rate change, bps/Hz
  double eps_power = 1e-3;  // power change, relative to p_max
  double mm_tol = 1e-4;     // surrogate objective change

  int t_j_max = 100;
  int alm_max_iter = 40;
  int inner_max_iter = 300;
  int outer_max_iter = 100;

  // Scheduler inner solver (Frank-Wolfe + ALM for C1..C3).
  int fw_max_iter = 30;
  double fw_gap_tol = 1e-5;
  int sched_alm_rounds = 2;
  double warm_start_mix = 0.5;

  AntennaMode antenna_mode = AntennaMode::kPerSubchannel;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Rates.

// Co-channel interference seen at BS b on sub-channel m when decoding user
// i: power from every user l != i served by a BS b' != b on m.
double interference(const NetworkInstance& inst, const Assignment& asg,
                    const PowerAllocation& p, std::size_t b, std::size_t m,
                    std::size_t i);

double rate(const NetworkInstance& inst, const Assignment& asg,
            const PowerAllocation& p, std::size_t i, std::size_t b,
            std::size_t m, std::size_t a);

// Sum over small-cell BSs of x * s * rate. Relaxed assignments are rejected.
double sum_rate(const NetworkInstance& inst, const Assignment& asg,
                const PowerAllocation& p);

// Per-user rate (sum over the user's active tuples).
std::vector<double> user_rates(const NetworkInstance& inst,
                               const Assignment& asg,
                               const PowerAllocation& p);

// ---------------------------------------------------------------------------
// Feasibility.

enum class Constraint {
  kC1PowerBudget,
  kC2CrossTier,
  kC3MinRate,
  kC4NonNegative,
  kC5SlotExclusive,
  kC6SingleAssociation,
  kC7OneAntenna,
  kC8AntennaBinary,
  kC9AssociationBinary,
};

std::string to_string(Constraint c);

struct Violation {
  Constraint constraint;
  // User for C1/C3/C6, sub-channel for C2, flat (b * M + m) slot for C5,
  // flat (i * M + m) for C7, flat tensor offset for C4/C8/C9.
  std::size_t index;
  double excess;  // amount by which the constraint is exceeded, > 0
};

struct FeasibilityTolerance {
  double relative = 1e-9;  // C1/C2, relative to the bound
  double rate = 1e-9;      // C3, bps/Hz
  double binary = 1e-12;   // C5..C9
};

// Every violated constraint. C3 applies only to scheduled users. An s entry
// on a BS that is not a candidate cell of its user (including the macro BS)
// is reported as a C6 violation.
std::vector<Violation> check_feasibility(const NetworkInstance& inst,
                                         const Assignment& asg,
                                         const PowerAllocation& p,
                                         const SolverConfig& cfg,
                                         const FeasibilityTolerance& tol = {});

}  // namespace hetnet

#endif  // HETNET_MODEL_H_
