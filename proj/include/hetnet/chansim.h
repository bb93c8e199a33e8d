#ifndef HETNET_CHANSIM_H_
#define HETNET_CHANSIM_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

#include "hetnet/model.h"

namespace hetnet {

// Drop geometry and propagation constants for one macro cell overlaid with
// small cells. Path loss is PL0 + 10 * theta * log10(d / 1 km) in dB.
struct Scenario {
  double macro_radius = 500.0;     // m
  double smallcell_radius = 50.0;  // m
  double min_distance = 10.0;      // m
  std::size_t num_smallcells = 4;
  std::size_t users_total = 20;
  std::size_t num_subchannels = 8;
  std::size_t num_antennas = 2;
  double pl0_macro = 128.1;
  double theta_macro = 3.76;
  double pl0_small = 140.7;
  double theta_small = 3.67;
  double noise_dbm = -120.0;
  double carrier_ghz = 2.0;        // informational
  double subchannel_khz = 180.0;   // informational
  std::uint64_t seed = 1;

  void validate() const;
};

double path_loss_db(double distance_m, double pl0_db, double theta);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Macro BS at the origin, small cells uniform in the macro disk (kept a
// small-cell radius inside the edge), each user attached uniformly at random
// to a small cell and dropped uniformly in its disk. Every user may associate
// with every small cell. Gains are 10^(-PL/10) times an independent unit-mean
// exponential (Rayleigh power) draw per (user, bs, subchannel, antenna).
// Bit-identical for a fixed seed.
NetworkInstance generate_instance(const Scenario& sc);

// Portable uniform / exponential draws on top of mt19937_64 so that drops are
// reproducible across standard library implementations.
class DropRng {
 public:
  explicit DropRng(std::uint64_t seed) : engine_(seed) {}
  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hetnet

#endif  // HETNET_CHANSIM_H_
