#pragma once

#include <span>
#include <type_traits>
#include <vector>

#include "neolus/nn/layers.hpp"

namespace neolus {

/// Output of a backbone's last convolution for one image: channels x height x width, row-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}
  double& at(int c, int h, int w) { return values[(static_cast<std::size_t>(c) * height + h) * width + w]; }
  double at(int c, int h, int w) const { return values[(static_cast<std::size_t>(c) * height + h) * width + w]; }
};

namespace pool_kernels {

/// Sums run in a wider type so that the mean of a constant map rounds back to that constant.
template <class T>
using Accumulator = std::conditional_t<std::is_same_v<T, float>, double, long double>;

/// out[c * W + w] = mean_h in[c, h, w]
template <class T>
void position_preserving_forward(std::span<const T> in, int channels, int height, int width, std::span<T> out) {
  for (int c = 0; c < channels; ++c)
    for (int w = 0; w < width; ++w) {
      Accumulator<T> s = 0;
      for (int h = 0; h < height; ++h) s += in[(static_cast<std::size_t>(c) * height + h) * width + w];
      out[static_cast<std::size_t>(c) * width + w] = static_cast<T>(s / height);
    }
}

template <class T>
void position_preserving_backward(std::span<const T> grad_out, int channels, int height, int width,
                                  std::span<T> grad_in) {
  for (int c = 0; c < channels; ++c)
    for (int h = 0; h < height; ++h)
      for (int w = 0; w < width; ++w)
        grad_in[(static_cast<std::size_t>(c) * height + h) * width + w] =
            grad_out[static_cast<std::size_t>(c) * width + w] / static_cast<T>(height);
}

/// out[c] = mean_{h,w} in[c, h, w]
template <class T>
void global_average_forward(std::span<const T> in, int channels, int height, int width, std::span<T> out) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    Accumulator<T> s = 0;
    for (std::size_t i = 0; i < hw; ++i) s += in[static_cast<std::size_t>(c) * hw + i];
    out[static_cast<std::size_t>(c)] = static_cast<T>(s / static_cast<Accumulator<T>>(hw));
  }
}

template <class T>
void global_average_backward(std::span<const T> grad_out, int channels, int height, int width, std::span<T> grad_in) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < hw; ++i)
      grad_in[static_cast<std::size_t>(c) * hw + i] = grad_out[static_cast<std::size_t>(c)] / static_cast<T>(hw);
}

}  // namespace pool_kernels

/// Averages over the height axis only, keeping one value per (channel, column); flattened
/// channel-major. Column identity survives, so features from different vertical stripes of
/// the image are never mixed.
std::vector<double> position_preserving_pool(const FeatureMap& f);
std::vector<double> global_average_pool(const FeatureMap& f);

/// Gradients w.r.t. the map given the gradient w.r.t. the pooled vector.
FeatureMap position_preserving_pool_backward(const FeatureMap& shape, std::span<const double> grad_out);
FeatureMap global_average_pool_backward(const FeatureMap& shape, std::span<const double> grad_out);

/// Reverses the column order of every (channel, row).
FeatureMap hflip_columns(const FeatureMap& f);

enum class PoolingKind { GlobalAverage, PositionPreserving };

/// Pooling stage between the trunk and the final linear layer. Output N x C x 1 x 1 for global
/// average, N x C x 1 x W' for position-preserving.
class PoolingLayer final : public nn::Module {
 public:
  explicit PoolingLayer(PoolingKind kind) : kind_(kind) {}
  nn::Tensor forward(const nn::Tensor& x, bool training) override;
  nn::Tensor backward(const nn::Tensor& grad_out) override;
  nn::Shape output_shape(const nn::Shape& in) const override;
  std::string describe() const override;
  PoolingKind kind() const { return kind_; }

 private:
  PoolingKind kind_;
  nn::Shape in_shape_;
};

}  // namespace neolus
