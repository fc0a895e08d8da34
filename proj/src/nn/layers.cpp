#include "neolus/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "neolus/error.hpp"

namespace neolus::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int conv_out(int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; }

void im2col(const float* x, int channels, int h, int w, int k, int s, int p, int ho, int wo, float* col) {
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    const float* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * hw;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * s - p + ki;
          float* dst = row + static_cast<std::size_t>(oh) * wo;
          if (ih < 0 || ih >= h) {
            std::fill_n(dst, wo, 0.0f);
            continue;
          }
          const float* src = xc + static_cast<std::size_t>(ih) * w;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * s - p + kj;
            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int channels, int h, int w, int k, int s, int p, int ho, int wo, float* x) {
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    float* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = col + (static_cast<std::size_t>(c * k + ki) * k + kj) * hw;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * s - p + ki;
          if (ih < 0 || ih >= h) continue;
          const float* src = row + static_cast<std::size_t>(oh) * wo;
          float* dst = xc + static_cast<std::size_t>(ih) * w;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * s - p + kj;
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

std::size_t parameter_count(Module& m) {
  std::vector<Parameter*> ps;
  m.parameters(ps);
  std::size_t n = 0;
  for (auto* p : ps) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in, int out, int kernel, int stride, int padding, Rng& rng, int groups, bool bias)
    : in_(in),
      out_(out),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      groups_(groups),
      weight_(Shape{out, in / std::max(groups, 1), kernel, kernel}) {
  if (in < 1 || out < 1 || kernel < 1 || stride < 1 || padding < 0 || groups < 1 || in % groups || out % groups)
    throw ArgumentError("invalid Conv2d configuration");
  // Kaiming normal, fan-out mode.
  const double std_dev = std::sqrt(2.0 / (static_cast<double>(out) * kernel * kernel));
  for (auto& v : weight_.value.span()) v = static_cast<float>(rng.normal() * std_dev);
  if (bias) bias_ = std::make_unique<Parameter>(Shape{1, out, 1, 1}, false);
}

void Conv2d::check_input(const Shape& s) const {
  if (s.c != in_) throw ArgumentError("Conv2d expects " + std::to_string(in_) + " channels, got " + s.str());
  if (s.h + 2 * pad_ < k_ || s.w + 2 * pad_ < k_) throw ArgumentError("Conv2d input too small: " + s.str());
}

Shape Conv2d::output_shape(const Shape& in) const {
  check_input(in);
  return {in.n, out_, conv_out(in.h, k_, stride_, pad_), conv_out(in.w, k_, stride_, pad_)};
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
  const Shape os = output_shape(x.shape());
  Tensor y(os);
  const int h = x.h(), w = x.w(), ho = os.h, wo = os.w;
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
  if (groups_ == in_ && groups_ == out_) {
    // Depthwise.
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < in_; ++c) {
        const float* xp = x.plane(n, c);
        const float* kp = weight_.value.data() + static_cast<std::size_t>(c) * k_ * k_;
        float* yp = y.plane(n, c);
        for (int oh = 0; oh < ho; ++oh) {
          for (int ki = 0; ki < k_; ++ki) {
            const int ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= h) continue;
            const float* xr = xp + static_cast<std::size_t>(ih) * w;
            float* yr = yp + static_cast<std::size_t>(oh) * wo;
            for (int kj = 0; kj < k_; ++kj) {
              const float kv = kp[ki * k_ + kj];
              const int lo = std::max(0, (pad_ - kj + stride_ - 1) / stride_);
              const int num = w - 1 + pad_ - kj;
              const int hi = num < 0 ? 0 : std::min(wo, num / stride_ + 1);
              for (int ow = lo; ow < hi; ++ow) yr[ow] += kv * xr[ow * stride_ - pad_ + kj];
            }
          }
        }
      }
    }
  } else {
    const int cin_g = in_ / groups_, cout_g = out_ / groups_;
    const int kdim = cin_g * k_ * k_;
    const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
    std::vector<float> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * hw);
    for (int n = 0; n < x.n(); ++n) {
      for (int g = 0; g < groups_; ++g) {
        const float* src = x.plane(n, g * cin_g);
        if (!pointwise) {
          im2col(src, cin_g, h, w, k_, stride_, pad_, ho, wo, col.data());
          src = col.data();
        }
        ConstMapMat wm(weight_.value.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
        ConstMapMat cm(src, kdim, static_cast<Eigen::Index>(hw));
        MapMat ym(y.plane(n, g * cout_g), cout_g, static_cast<Eigen::Index>(hw));
        ym.noalias() = wm * cm;
      }
    }
  }
  if (bias_) {
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < out_; ++c) {
        float* yp = y.plane(n, c);
        const float b = bias_->value[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < hw; ++i) yp[i] += b;
      }
  }
  if (training) input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const Shape os = output_shape(x.shape());
  if (!(grad_out.shape() == os)) throw ArgumentError("Conv2d backward shape mismatch");
  Tensor dx(x.shape());
  const int h = x.h(), w = x.w(), ho = os.h, wo = os.w;
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
  if (bias_) {
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < out_; ++c) {
        const float* gp = grad_out.plane(n, c);
        double s = 0;
        for (std::size_t i = 0; i < hw; ++i) s += gp[i];
        bias_->grad[static_cast<std::size_t>(c)] += static_cast<float>(s);
      }
  }
  if (groups_ == in_ && groups_ == out_) {
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < in_; ++c) {
        const float* xp = x.plane(n, c);
        const float* gp = grad_out.plane(n, c);
        float* dxp = dx.plane(n, c);
        const float* kp = weight_.value.data() + static_cast<std::size_t>(c) * k_ * k_;
        float* dkp = weight_.grad.data() + static_cast<std::size_t>(c) * k_ * k_;
        for (int oh = 0; oh < ho; ++oh) {
          const float* gr = gp + static_cast<std::size_t>(oh) * wo;
          for (int ki = 0; ki < k_; ++ki) {
            const int ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= h) continue;
            const float* xr = xp + static_cast<std::size_t>(ih) * w;
            float* dxr = dxp + static_cast<std::size_t>(ih) * w;
            for (int kj = 0; kj < k_; ++kj) {
              const float kv = kp[ki * k_ + kj];
              const int lo = std::max(0, (pad_ - kj + stride_ - 1) / stride_);
              const int num = w - 1 + pad_ - kj;
              const int hi = num < 0 ? 0 : std::min(wo, num / stride_ + 1);
              float acc = 0.0f;
              for (int ow = lo; ow < hi; ++ow) {
                const int iw = ow * stride_ - pad_ + kj;
                acc += gr[ow] * xr[iw];
                dxr[iw] += gr[ow] * kv;
              }
              dkp[ki * k_ + kj] += acc;
            }
          }
        }
      }
    }
    return dx;
  }
  const int cin_g = in_ / groups_, cout_g = out_ / groups_;
  const int kdim = cin_g * k_ * k_;
  const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
  std::vector<float> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * hw);
  std::vector<float> dcol(pointwise ? 0 : static_cast<std::size_t>(kdim) * hw);
  for (int n = 0; n < x.n(); ++n) {
    for (int g = 0; g < groups_; ++g) {
      const float* src = x.plane(n, g * cin_g);
      if (!pointwise) {
        im2col(src, cin_g, h, w, k_, stride_, pad_, ho, wo, col.data());
        src = col.data();
      }
      ConstMapMat gm(grad_out.plane(n, g * cout_g), cout_g, static_cast<Eigen::Index>(hw));
      ConstMapMat cm(src, kdim, static_cast<Eigen::Index>(hw));
      ConstMapMat wm(weight_.value.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
      MapMat dwm(weight_.grad.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
      dwm.noalias() += gm * cm.transpose();
      if (pointwise) {
        MapMat dxm(dx.plane(n, g * cin_g), kdim, static_cast<Eigen::Index>(hw));
        dxm.noalias() = wm.transpose() * gm;
      } else {
        MapMat dcm(dcol.data(), kdim, static_cast<Eigen::Index>(hw));
        dcm.noalias() = wm.transpose() * gm;
        col2im(dcol.data(), cin_g, h, w, k_, stride_, pad_, ho, wo, dx.plane(n, g * cin_g));
      }
    }
  }
  return dx;
}

void Conv2d::parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (bias_) out.push_back(bias_.get());
}

std::string Conv2d::describe() const {
  return "Conv2d(" + std::to_string(in_) + "->" + std::to_string(out_) + ", k" + std::to_string(k_) + ", s" +
         std::to_string(stride_) + ", p" + std::to_string(pad_) +
         (groups_ > 1 ? ", g" + std::to_string(groups_) : std::string()) + ")";
}

// ---------------------------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps)
    : c_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(Shape{1, channels, 1, 1}, false),
      beta_(Shape{1, channels, 1, 1}, false),
      running_mean_(1, channels, 1, 1, 0.0f),
      running_var_(1, channels, 1, 1, 1.0f) {
  gamma_.value.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  if (x.c() != c_) throw ArgumentError("BatchNorm2d channel mismatch: " + x.shape().str());
  Tensor y(x.shape());
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  const std::size_t m = hw * x.n();
  if (training) {
    xhat_ = Tensor(x.shape());
    inv_std_.assign(static_cast<std::size_t>(c_), 0.0f);
  }
  for (int c = 0; c < c_; ++c) {
    float mean, inv;
    if (training) {
      double s = 0, ss = 0;
      for (int n = 0; n < x.n(); ++n) {
        const float* p = x.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(m);
      for (int n = 0; n < x.n(); ++n) {
        const float* p = x.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / static_cast<double>(m);
      mean = static_cast<float>(mu);
      inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
      inv_std_[static_cast<std::size_t>(c)] = inv;
      const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
      running_mean_[static_cast<std::size_t>(c)] =
          (1 - momentum_) * running_mean_[static_cast<std::size_t>(c)] + momentum_ * mean;
      running_var_[static_cast<std::size_t>(c)] = static_cast<float>(
          (1 - momentum_) * running_var_[static_cast<std::size_t>(c)] + momentum_ * unbiased);
    } else {
      mean = running_mean_[static_cast<std::size_t>(c)];
      inv = 1.0f / std::sqrt(running_var_[static_cast<std::size_t>(c)] + eps_);
    }
    const float g = gamma_.value[static_cast<std::size_t>(c)];
    const float b = beta_.value[static_cast<std::size_t>(c)];
    for (int n = 0; n < x.n(); ++n) {
      const float* p = x.plane(n, c);
      float* q = y.plane(n, c);
      float* xh = training ? xhat_.plane(n, c) : nullptr;
      for (std::size_t i = 0; i < hw; ++i) {
        const float v = (p[i] - mean) * inv;
        if (xh) xh[i] = v;
        q[i] = g * v + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  if (!(grad_out.shape() == xhat_.shape())) throw ArgumentError("BatchNorm2d backward shape mismatch");
  Tensor dx(grad_out.shape());
  const std::size_t hw = static_cast<std::size_t>(grad_out.h()) * grad_out.w();
  const double m = static_cast<double>(hw * grad_out.n());
  for (int c = 0; c < c_; ++c) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int n = 0; n < grad_out.n(); ++n) {
      const float* g = grad_out.plane(n, c);
      const float* xh = xhat_.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += g[i];
        sum_dy_xhat += g[i] * xh[i];
      }
    }
    gamma_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xhat);
    beta_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);
    const double gm = gamma_.value[static_cast<std::size_t>(c)];
    const double scale = gm * inv_std_[static_cast<std::size_t>(c)] / m;
    for (int n = 0; n < grad_out.n(); ++n) {
      const float* g = grad_out.plane(n, c);
      const float* xh = xhat_.plane(n, c);
      float* d = dx.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i)
        d[i] = static_cast<float>(scale * (m * g[i] - sum_dy - xh[i] * sum_dy_xhat));
    }
  }
  return dx;
}

void BatchNorm2d::parameters(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::buffers(std::vector<Tensor*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

std::string BatchNorm2d::describe() const { return "BatchNorm2d(" + std::to_string(c_) + ")"; }

// ---------------------------------------------------------------------------------------------
// Activations

Tensor Act::forward(const Tensor& x, bool training) {
  Tensor y(x.shape());
  const std::size_t n = x.size();
  switch (kind_) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
      break;
    case Activation::SiLU:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * sigmoid(x[i]);
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid(x[i]);
      break;
  }
  if (training) {
    input_ = x;
    if (kind_ == Activation::Sigmoid) output_ = y;
  }
  return y;
}

Tensor Act::backward(const Tensor& grad_out) {
  Tensor dx(grad_out.shape());
  const std::size_t n = grad_out.size();
  switch (kind_) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < n; ++i) dx[i] = input_[i] > 0.0f ? grad_out[i] : 0.0f;
      break;
    case Activation::SiLU:
      for (std::size_t i = 0; i < n; ++i) {
        const float s = sigmoid(input_[i]);
        dx[i] = grad_out[i] * (s + input_[i] * s * (1.0f - s));
      }
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) dx[i] = grad_out[i] * output_[i] * (1.0f - output_[i]);
      break;
  }
  return dx;
}

std::string Act::describe() const {
  switch (kind_) {
    case Activation::ReLU: return "ReLU";
    case Activation::SiLU: return "SiLU";
    case Activation::Sigmoid: return "Sigmoid";
  }
  return "Act";
}

// ---------------------------------------------------------------------------------------------
// MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const {
  if (in.h + 2 * pad_ < k_ || in.w + 2 * pad_ < k_) throw ArgumentError("MaxPool2d input too small: " + in.str());
  return {in.n, in.c, conv_out(in.h, k_, stride_, pad_), conv_out(in.w, k_, stride_, pad_)};
}

Tensor MaxPool2d::forward(const Tensor& x, bool training) {
  const Shape os = output_shape(x.shape());
  Tensor y(os);
  if (training) {
    in_shape_ = x.shape();
    argmax_.assign(os.numel(), 0);
  }
  std::size_t o = 0;
  for (int n = 0; n < os.n; ++n)
    for (int c = 0; c < os.c; ++c) {
      const float* p = x.plane(n, c);
      const std::size_t base = static_cast<std::size_t>(p - x.data());
      for (int oh = 0; oh < os.h; ++oh)
        for (int ow = 0; ow < os.w; ++ow, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_i = 0;
          for (int ki = 0; ki < k_; ++ki) {
            const int ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= x.h()) continue;
            for (int kj = 0; kj < k_; ++kj) {
              const int iw = ow * stride_ - pad_ + kj;
              if (iw < 0 || iw >= x.w()) continue;
              const std::size_t i = static_cast<std::size_t>(ih) * x.w() + iw;
              if (p[i] > best) {
                best = p[i];
                best_i = base + i;
              }
            }
          }
          y[o] = best;
          if (training) argmax_[o] = best_i;
        }
    }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) dx[argmax_[o]] += grad_out[o];
  return dx;
}

std::string MaxPool2d::describe() const {
  return "MaxPool2d(k" + std::to_string(k_) + ", s" + std::to_string(stride_) + ", p" + std::to_string(pad_) + ")";
}

// ---------------------------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features, Rng& rng)
    : in_(in_features),
      out_(out_features),
      weight_(Shape{out_features, in_features, 1, 1}),
      bias_(Shape{1, out_features, 1, 1}, false) {
  if (in_features < 1 || out_features < 1) throw ArgumentError("invalid Linear configuration");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  for (auto& v : weight_.value.span()) v = static_cast<float>(rng.uniform(-bound, bound));
  for (auto& v : bias_.value.span()) v = static_cast<float>(rng.uniform(-bound, bound));
}

Shape Linear::output_shape(const Shape& in) const {
  if (static_cast<std::size_t>(in.c) * in.h * in.w != static_cast<std::size_t>(in_))
    throw ArgumentError("Linear expects " + std::to_string(in_) + " features, got " + in.str());
  return {in.n, out_, 1, 1};
}

Tensor Linear::forward(const Tensor& x, bool training) {
  Tensor y(output_shape(x.shape()));
  ConstMapMat xm(x.data(), x.n(), in_);
  ConstMapMat wm(weight_.value.data(), out_, in_);
  MapMat ym(y.data(), x.n(), out_);
  ym.noalias() = xm * wm.transpose();
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < out_; ++o) ym(n, o) += bias_.value[static_cast<std::size_t>(o)];
  if (training) input_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int batch = input_.n();
  ConstMapMat gm(grad_out.data(), batch, out_);
  ConstMapMat xm(input_.data(), batch, in_);
  MapMat dwm(weight_.grad.data(), out_, in_);
  dwm.noalias() += gm.transpose() * xm;
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += gm(n, o);
  Tensor dx(input_.shape());
  MapMat dxm(dx.data(), batch, in_);
  ConstMapMat wm(weight_.value.data(), out_, in_);
  dxm.noalias() = gm * wm;
  return dx;
}

void Linear::parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

std::string Linear::describe() const {
  return "Linear(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

// ---------------------------------------------------------------------------------------------
// Containers

Sequential& Sequential::add(ModulePtr m) {
  layers_.push_back(std::move(m));
  return *this;
}

Tensor Sequential::forward(const Tensor& x, bool training) {
  Tensor y = x;
  for (auto& l : layers_) y = l->forward(y, training);
  return y;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

void Sequential::parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->parameters(out);
}

void Sequential::buffers(std::vector<Tensor*>& out) {
  for (auto& l : layers_) l->buffers(out);
}

std::string Sequential::describe() const {
  std::string s = "Sequential[";
  for (std::size_t i = 0; i < layers_.size(); ++i) s += (i ? ", " : "") + layers_[i]->describe();
  return s + "]";
}

Residual::Residual(ModulePtr body, ModulePtr shortcut, bool relu_after)
    : body_(std::move(body)), shortcut_(std::move(shortcut)), relu_after_(relu_after) {}

Tensor Residual::forward(const Tensor& x, bool training) {
  Tensor y = body_->forward(x, training);
  const Tensor s = shortcut_ ? shortcut_->forward(x, training) : x;
  if (!(s.shape() == y.shape())) throw ArgumentError("residual branch shape mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) {
    const float v = y[i] + s[i];
    y[i] = (relu_after_ && v < 0.0f) ? 0.0f : v;
  }
  if (training && relu_after_) output_ = y;
  return y;
}

Tensor Residual::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  if (relu_after_)
    for (std::size_t i = 0; i < g.size(); ++i)
      if (output_[i] <= 0.0f) g[i] = 0.0f;
  Tensor dx = body_->backward(g);
  if (shortcut_) {
    const Tensor ds = shortcut_->backward(g);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += ds[i];
  } else {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i];
  }
  return dx;
}

Shape Residual::output_shape(const Shape& in) const { return body_->output_shape(in); }

void Residual::parameters(std::vector<Parameter*>& out) {
  body_->parameters(out);
  if (shortcut_) shortcut_->parameters(out);
}

void Residual::buffers(std::vector<Tensor*>& out) {
  body_->buffers(out);
  if (shortcut_) shortcut_->buffers(out);
}

std::string Residual::describe() const {
  return "Residual(" + body_->describe() + (shortcut_ ? " + " + shortcut_->describe() : std::string(" + id")) + ")";
}

// ---------------------------------------------------------------------------------------------
// SqueezeExcite

SqueezeExcite::SqueezeExcite(int channels, int reduced, Rng& rng)
    : c_(channels), reduce_(channels, reduced, 1, 1, 0, rng, 1, true), expand_(reduced, channels, 1, 1, 0, rng, 1, true) {}

Tensor SqueezeExcite::forward(const Tensor& x, bool training) {
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  Tensor pooled(x.n(), c_, 1, 1);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < c_; ++c) {
      const float* p = x.plane(n, c);
      double s = 0;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      pooled.at(n, c, 0, 0) = static_cast<float>(s / static_cast<double>(hw));
    }
  Tensor scale = gate_.forward(expand_.forward(silu_.forward(reduce_.forward(pooled, training), training), training),
                               training);
  Tensor y(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < c_; ++c) {
      const float s = scale.at(n, c, 0, 0);
      const float* p = x.plane(n, c);
      float* q = y.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) q[i] = p[i] * s;
    }
  if (training) {
    input_ = x;
    scale_ = std::move(scale);
  }
  return y;
}

Tensor SqueezeExcite::backward(const Tensor& grad_out) {
  const Tensor& x = input_;
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  Tensor dscale(x.n(), c_, 1, 1);
  Tensor dx(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < c_; ++c) {
      const float s = scale_.at(n, c, 0, 0);
      const float* g = grad_out.plane(n, c);
      const float* p = x.plane(n, c);
      float* d = dx.plane(n, c);
      double acc = 0;
      for (std::size_t i = 0; i < hw; ++i) {
        acc += g[i] * p[i];
        d[i] = g[i] * s;
      }
      dscale.at(n, c, 0, 0) = static_cast<float>(acc);
    }
  const Tensor dpooled = reduce_.backward(silu_.backward(expand_.backward(gate_.backward(dscale))));
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < c_; ++c) {
      const float v = dpooled.at(n, c, 0, 0) / static_cast<float>(hw);
      float* d = dx.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) d[i] += v;
    }
  return dx;
}

void SqueezeExcite::parameters(std::vector<Parameter*>& out) {
  reduce_.parameters(out);
  expand_.parameters(out);
}

std::string SqueezeExcite::describe() const { return "SqueezeExcite(" + std::to_string(c_) + ")"; }

}  // namespace neolus::nn
