#ifndef HETNET_TESTS_TEST_UTIL_H_
#define HETNET_TESTS_TEST_UTIL_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "hetnet/chansim.h"
#include "hetnet/model.h"

namespace hetnet::testing {

// Instance whose gains come from g(u, b, m, a).
inline NetworkInstance make_instance(
    std::size_t B, std::size_t I, std::size_t M, std::size_t A,
    const std::function<double(std::size_t, std::size_t, std::size_t,
                               std::size_t)>& g,
    double noise) {
  std::vector<double> gain;
  for (std::size_t u = 0; u < I; ++u)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) gain.push_back(g(u, b, m, a));
  return NetworkInstance(B, I, M, A, std::move(gain), noise);
}

inline NetworkInstance small_drop(std::uint64_t seed, std::size_t cells = 2,
                                  std::size_t users = 4, std::size_t M = 3,
                                  std::size_t A = 2) {
  Scenario sc;
  sc.num_smallcells = cells;
  sc.users_total = users;
  sc.num_subchannels = M;
  sc.num_antennas = A;
  sc.seed = seed;
  return generate_instance(sc);
}

inline NetworkInstance default_drop(std::uint64_t seed) {
  Scenario sc;
  sc.seed = seed;
  return generate_instance(sc);
}

}  // namespace hetnet::testing

#endif  // HETNET_TESTS_TEST_UTIL_H_
