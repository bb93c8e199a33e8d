#include "hetnet/matching.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hetnet {

// Shortest augmenting path Hungarian method (potentials u, v) on the cost
// matrix -w, padded with one zero-cost dummy column per row so that leaving a
// row unmatched is always an option.
std::vector<int> max_weight_matching(const std::vector<double>& weight,
                                     std::size_t rows, std::size_t cols) {
  if (weight.size() != rows * cols) {
    throw std::invalid_argument("matching weight matrix has wrong size");
  }
  if (rows == 0) return {};
  const std::size_t n = rows;
  const std::size_t m = cols + rows;
  auto cost = [&](std::size_t r, std::size_t c) {
    if (c >= cols) return 0.0;
    const double w = weight[r * cols + c];
    return w > 0.0 ? -w : 0.0;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; p[j] is the row matched to column j, row 0 is virtual.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> match(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (p[j] != 0 && weight[(p[j] - 1) * cols + (j - 1)] > 0.0) {
      match[p[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return match;
}

}  // namespace hetnet
