#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace neolus::nn {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;
  std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense NCHW float tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape_(s), data_(s.numel(), fill) {}
  Tensor(int n, int c, int h, int w, float fill = 0.0f) : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> span() { return data_; }
  std::span<const float> span() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  /// Pointer to the (n, c) plane.
  float* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const float* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(float v);
  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape s) const;

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape shape_;
  std::vector<float> data_;
};

}  // namespace neolus::nn
