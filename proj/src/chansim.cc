#include "hetnet/chansim.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetnet {

namespace {

struct Point {
  double x;
  double y;
};

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Uniform in the annulus [r_min, r_max] around `centre`.
Point drop_in_disk(DropRng& rng, const Point& centre, double r_min,
                   double r_max) {
  const double u = rng.uniform();
  const double r = std::sqrt(r_min * r_min + u * (r_max * r_max - r_min * r_min));
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  return {centre.x + r * std::cos(phi), centre.y + r * std::sin(phi)};
}

}  // namespace

void Scenario::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument(std::string("invalid scenario ") + field);
  };
  require(macro_radius > 0.0, "macro_radius");
  require(smallcell_radius > 0.0, "smallcell_radius");
  require(smallcell_radius < macro_radius, "smallcell_radius");
  require(min_distance > 0.0 && min_distance < smallcell_radius, "min_distance");
  require(num_smallcells > 0, "num_smallcells");
  require(users_total > 0, "users_total");
  require(num_subchannels > 0, "num_subchannels");
  require(num_antennas > 0, "num_antennas");
  require(theta_macro > 0.0, "theta_macro");
  require(theta_small > 0.0, "theta_small");
  require(std::isfinite(noise_dbm), "noise_dbm");
}

double path_loss_db(double distance_m, double pl0_db, double theta) {
  if (!(distance_m > 0.0)) {
    throw std::domain_error("path loss needs a positive distance");
  }
  return pl0_db + 10.0 * theta * std::log10(distance_m / 1000.0);
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) {
  if (!(watts > 0.0)) throw std::domain_error("dBm of a non-positive power");
  return 10.0 * std::log10(watts) + 30.0;
}

NetworkInstance generate_instance(const Scenario& sc) {
  sc.validate();
  DropRng rng(sc.seed);

  const std::size_t num_bs = sc.num_smallcells + 1;
  std::vector<Point> bs(num_bs, Point{0.0, 0.0});
  for (std::size_t b = 1; b < num_bs; ++b) {
    bs[b] = drop_in_disk(rng, bs[0], sc.min_distance,
                         sc.macro_radius - sc.smallcell_radius);
  }

  std::vector<Point> users(sc.users_total);
  for (auto& u : users) {
    const auto home = 1 + std::min<std::size_t>(
                              sc.num_smallcells - 1,
                              static_cast<std::size_t>(rng.uniform() *
                                                       sc.num_smallcells));
    u = drop_in_disk(rng, bs[home], sc.min_distance, sc.smallcell_radius);
  }

  const std::size_t M = sc.num_subchannels;
  const std::size_t A = sc.num_antennas;
  std::vector<double> gain;
  gain.reserve(sc.users_total * num_bs * M * A);
  for (std::size_t u = 0; u < sc.users_total; ++u) {
    for (std::size_t b = 0; b < num_bs; ++b) {
      const double d = std::max(sc.min_distance, distance(users[u], bs[b]));
      const double pl = b == kMacroBs
                            ? path_loss_db(d, sc.pl0_macro, sc.theta_macro)
                            : path_loss_db(d, sc.pl0_small, sc.theta_small);
      const double mean = std::pow(10.0, -pl / 10.0);
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a)
          gain.push_back(mean * rng.exponential());
    }
  }
  return NetworkInstance(num_bs, sc.users_total, M, A, std::move(gain),
                         dbm_to_watts(sc.noise_dbm));
}

}  // namespace hetnet
