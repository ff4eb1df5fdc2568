#include "dcan/tensor.hpp"

namespace dcan {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = shape.empty() ? 0 : 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace dcan
