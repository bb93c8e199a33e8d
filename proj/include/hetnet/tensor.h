#ifndef HETNET_TENSOR_H_
#define HETNET_TENSOR_H_

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetnet {

// Dense row-major tensor of doubles with a fixed rank.
template <std::size_t Rank>
class Tensor {
 public:
  using Shape = std::array<std::size_t, Rank>;

  Tensor() { shape_.fill(0); }

  explicit Tensor(const Shape& shape, double fill = 0.0) : shape_(shape) {
    std::size_t n = 1;
    for (auto d : shape_) n *= d;
    data_.assign(n, fill);
  }

  Tensor(const Shape& shape, std::vector<double> data)
      : shape_(shape), data_(std::move(data)) {
    std::size_t n = 1;
    for (auto d : shape_) n *= d;
    if (data_.size() != n) {
      throw std::invalid_argument("tensor data size " +
                                  std::to_string(data_.size()) +
                                  " does not match shape volume " +
                                  std::to_string(n));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }

  template <typename... Index>
  double& operator()(Index... idx) {
    static_assert(sizeof...(Index) == Rank, "wrong number of indices");
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  template <typename... Index>
  double operator()(Index... idx) const {
    static_assert(sizeof...(Index) == Rank, "wrong number of indices");
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  // Bounds-checked access.
  template <typename... Index>
  double at(Index... idx) const {
    static_assert(sizeof...(Index) == Rank, "wrong number of indices");
    const Shape index{static_cast<std::size_t>(idx)...};
    check(index);
    return data_[offset(index)];
  }

  void check(const Shape& index) const {
    for (std::size_t k = 0; k < Rank; ++k) {
      if (index[k] >= shape_[k]) {
        throw std::out_of_range("tensor index " + std::to_string(index[k]) +
                                " out of range on axis " + std::to_string(k) +
                                " (extent " + std::to_string(shape_[k]) + ")");
      }
    }
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(const Shape& index) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < Rank; ++k) off = off * shape_[k] + index[k];
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;

}  // namespace hetnet

#endif  // HETNET_TENSOR_H_
