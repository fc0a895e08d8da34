#include "neolus/nn/tensor.hpp"

#include <algorithm>

#include "neolus/error.hpp"

namespace neolus::nn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape s) const {
  if (s.numel() != shape_.numel()) throw ArgumentError("reshape " + shape_.str() + " -> " + s.str());
  Tensor t = *this;
  t.shape_ = s;
  return t;
}

}  // namespace neolus::nn
