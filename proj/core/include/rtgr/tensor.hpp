#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtgr/rng.hpp"

namespace rtgr {

/// Error type for every failure the library reports. The message always
/// names the operation and the offending quantity.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised on malformed configuration files; mapped to its own exit code by
/// the CLI.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

[[noreturn]] void fail(const std::string& msg);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major N-d array of values with an optional gradient buffer.
/// T is float or double; double is the training and testing default.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

  TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
      fail("tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
           shape_str(shape_));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }
  static TensorT full(Shape shape, T value) { return TensorT(std::move(shape), value); }

  static TensorT gaussian(Shape shape, Rng& rng, double mean, double stddev) {
    TensorT t(std::move(shape));
    for (auto& v : t.data_) v = static_cast<T>(rng.normal(mean, stddev));
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t numel() const { return data_.size(); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Flat offset of (n, c, y, x) in a rank-4 tensor.
  std::size_t offset4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return ((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

  bool has_grad() const { return !grad_.empty(); }

  /// Gradient buffer, allocated (zero-filled) on first use.
  std::vector<T>& grad() {
    if (grad_.empty()) grad_.assign(data_.size(), T{});
    return grad_;
  }
  const std::vector<T>& grad() const {
    if (grad_.empty()) fail("tensor: gradient accessed before backward");
    return grad_;
  }

  void zero_grad() { grad_.assign(data_.size(), T{}); }
  void drop_grad() { grad_.clear(); }

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    TensorT<U> t(shape_, std::move(out));
    t.set_requires_grad(requires_grad_);
    return t;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
  bool requires_grad_ = false;
};

template <typename T>
bool all_finite(const std::vector<T>& values);

extern template class TensorT<float>;
extern template class TensorT<double>;
extern template bool all_finite<float>(const std::vector<float>&);
extern template bool all_finite<double>(const std::vector<double>&);

using Tensor = TensorT<double>;

}  // namespace rtgr
