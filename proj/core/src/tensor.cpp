#include "rtgr/tensor.hpp"

#include <cmath>

namespace rtgr {

void fail(const std::string& msg) { throw Error(msg); }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) fail("tensor: zero extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
bool all_finite(const std::vector<T>& values) {
  for (const T v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class TensorT<float>;
template class TensorT<double>;
template bool all_finite<float>(const std::vector<float>&);
template bool all_finite<double>(const std::vector<double>&);

}  // namespace rtgr
