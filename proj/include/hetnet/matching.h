#ifndef HETNET_MATCHING_H_
#define HETNET_MATCHING_H_

#include <cstddef>
#include <vector>

namespace hetnet {

// Maximum-weight bipartite matching on a dense rows x cols weight matrix
// (row-major). Rows may stay unmatched, so only positive weights are ever
// used. Returns, per row, the matched column or -1. Deterministic.
std::vector<int> max_weight_matching(const std::vector<double>& weight,
                                     std::size_t rows, std::size_t cols);

}  // namespace hetnet

#endif  // HETNET_MATCHING_H_
