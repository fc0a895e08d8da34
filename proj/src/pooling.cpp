#include "neolus/pooling.hpp"

#include "neolus/error.hpp"

namespace neolus {

namespace {

void check(const FeatureMap& f) {
  if (f.channels < 1 || f.height < 1 || f.width < 1 ||
      f.values.size() != static_cast<std::size_t>(f.channels) * f.height * f.width)
    throw ArgumentError("malformed feature map");
}

}  // namespace

std::vector<double> position_preserving_pool(const FeatureMap& f) {
  check(f);
  std::vector<double> out(static_cast<std::size_t>(f.channels) * f.width);
  pool_kernels::position_preserving_forward<double>(f.values, f.channels, f.height, f.width, out);
  return out;
}

std::vector<double> global_average_pool(const FeatureMap& f) {
  check(f);
  std::vector<double> out(static_cast<std::size_t>(f.channels));
  pool_kernels::global_average_forward<double>(f.values, f.channels, f.height, f.width, out);
  return out;
}

FeatureMap position_preserving_pool_backward(const FeatureMap& shape, std::span<const double> grad_out) {
  check(shape);
  if (grad_out.size() != static_cast<std::size_t>(shape.channels) * shape.width)
    throw ArgumentError("gradient length must be C * W'");
  FeatureMap g(shape.channels, shape.height, shape.width);
  pool_kernels::position_preserving_backward<double>(grad_out, shape.channels, shape.height, shape.width, g.values);
  return g;
}

FeatureMap global_average_pool_backward(const FeatureMap& shape, std::span<const double> grad_out) {
  check(shape);
  if (grad_out.size() != static_cast<std::size_t>(shape.channels)) throw ArgumentError("gradient length must be C");
  FeatureMap g(shape.channels, shape.height, shape.width);
  pool_kernels::global_average_backward<double>(grad_out, shape.channels, shape.height, shape.width, g.values);
  return g;
}

FeatureMap hflip_columns(const FeatureMap& f) {
  check(f);
  FeatureMap out(f.channels, f.height, f.width);
  for (int c = 0; c < f.channels; ++c)
    for (int h = 0; h < f.height; ++h)
      for (int w = 0; w < f.width; ++w) out.at(c, h, w) = f.at(c, h, f.width - 1 - w);
  return out;
}

nn::Shape PoolingLayer::output_shape(const nn::Shape& in) const {
  if (in.h < 1 || in.w < 1) throw ArgumentError("pooling input must be non-empty: " + in.str());
  return kind_ == PoolingKind::GlobalAverage ? nn::Shape{in.n, in.c, 1, 1} : nn::Shape{in.n, in.c, 1, in.w};
}

nn::Tensor PoolingLayer::forward(const nn::Tensor& x, bool training) {
  nn::Tensor y(output_shape(x.shape()));
  const std::size_t in_stride = static_cast<std::size_t>(x.c()) * x.h() * x.w();
  const std::size_t out_stride = y.size() / static_cast<std::size_t>(std::max(x.n(), 1));
  for (int n = 0; n < x.n(); ++n) {
    std::span<const float> in(x.data() + n * in_stride, in_stride);
    std::span<float> out(y.data() + n * out_stride, out_stride);
    if (kind_ == PoolingKind::GlobalAverage) {
      pool_kernels::global_average_forward<float>(in, x.c(), x.h(), x.w(), out);
    } else {
      pool_kernels::position_preserving_forward<float>(in, x.c(), x.h(), x.w(), out);
    }
  }
  if (training) in_shape_ = x.shape();
  return y;
}

nn::Tensor PoolingLayer::backward(const nn::Tensor& grad_out) {
  nn::Tensor dx(in_shape_);
  const std::size_t in_stride = static_cast<std::size_t>(in_shape_.c) * in_shape_.h * in_shape_.w;
  const std::size_t out_stride = grad_out.size() / static_cast<std::size_t>(std::max(in_shape_.n, 1));
  for (int n = 0; n < in_shape_.n; ++n) {
    std::span<const float> g(grad_out.data() + n * out_stride, out_stride);
    std::span<float> d(dx.data() + n * in_stride, in_stride);
    if (kind_ == PoolingKind::GlobalAverage) {
      pool_kernels::global_average_backward<float>(g, in_shape_.c, in_shape_.h, in_shape_.w, d);
    } else {
      pool_kernels::position_preserving_backward<float>(g, in_shape_.c, in_shape_.h, in_shape_.w, d);
    }
  }
  return dx;
}

std::string PoolingLayer::describe() const {
  return kind_ == PoolingKind::GlobalAverage ? "GlobalAveragePool" : "PositionPreservingPool";
}

}  // namespace neolus
