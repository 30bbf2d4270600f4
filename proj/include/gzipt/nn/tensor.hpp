#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gzipt/common/error.hpp"

namespace gzipt::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape);

// Dense row-major array with an optional gradient buffer of the same size.
// Activations use the [channels, freq, time] layout.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == element_count(shape_), "tensor data does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // [C, F, T] element access.
  T& at(std::size_t c, std::size_t f, std::size_t t) { return data_[(c * shape_[1] + f) * shape_[2] + t]; }
  const T& at(std::size_t c, std::size_t f, std::size_t t) const {
    return data_[(c * shape_[1] + f) * shape_[2] + t];
  }

  bool has_grad() const { return !grad_.empty(); }
  void ensure_grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), T{0});
  }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), T{0}); }
  std::span<T> grad() { return grad_; }
  std::span<const T> grad() const { return grad_; }

  // Reshape in place, reallocating only when the element count grows.
  void resize(Shape shape) {
    shape_ = std::move(shape);
    data_.resize(element_count(shape_));
    if (!grad_.empty()) grad_.resize(data_.size());
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& src) {
  std::vector<To> data(src.size());
  std::transform(src.data().begin(), src.data().end(), data.begin(), [](From v) { return static_cast<To>(v); });
  return BasicTensor<To>(src.shape(), std::move(data));
}

}  // namespace gzipt::nn
