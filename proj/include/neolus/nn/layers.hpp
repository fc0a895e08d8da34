#pragma once

#include <memory>
#include <string>
#include <vector>

#include "neolus/nn/tensor.hpp"
#include "neolus/rng.hpp"

namespace neolus::nn {

struct Parameter {
  Tensor value;
  Tensor grad;
  bool decay = true;  // subject to weight decay

  explicit Parameter(Shape s, bool decay_ = true) : value(s), grad(s), decay(decay_) {}
};

/// Layer with explicit forward/backward. `forward(x, true)` caches what `backward` needs; a
/// module is therefore not re-entrant during training, while `forward(x, false)` on a module
/// that is not training does not touch shared state beyond its caches.
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  /// Gradient w.r.t. the input of the last training forward; accumulates parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  /// Shape-only dry run.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual void parameters(std::vector<Parameter*>&) {}
  virtual void buffers(std::vector<Tensor*>&) {}
  virtual std::string describe() const = 0;
};

using ModulePtr = std::unique_ptr<Module>;

std::size_t parameter_count(Module& m);

class Conv2d final : public Module {
 public:
  Conv2d(int in, int out, int kernel, int stride, int padding, Rng& rng, int groups = 1, bool bias = false);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void parameters(std::vector<Parameter*>& out) override;
  std::string describe() const override;

 private:
  void check_input(const Shape& s) const;

  int in_, out_, k_, stride_, pad_, groups_;
  Parameter weight_;
  std::unique_ptr<Parameter> bias_;
  Tensor input_;
};

class BatchNorm2d final : public Module {
 public:
  explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  void parameters(std::vector<Parameter*>& out) override;
  void buffers(std::vector<Tensor*>& out) override;
  std::string describe() const override;

 private:
  int c_;
  float momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor xhat_;
  std::vector<float> inv_std_;
};

enum class Activation { ReLU, SiLU, Sigmoid };

class Act final : public Module {
 public:
  explicit Act(Activation kind) : kind_(kind) {}
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::string describe() const override;

 private:
  Activation kind_;
  Tensor input_, output_;
};

class MaxPool2d final : public Module {
 public:
  MaxPool2d(int kernel, int stride, int padding) : k_(kernel), stride_(stride), pad_(padding) {}
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::string describe() const override;

 private:
  int k_, stride_, pad_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

/// Fully connected layer over the flattened C*H*W input; output is N x out x 1 x 1.
class Linear final : public Module {
 public:
  Linear(int in_features, int out_features, Rng& rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void parameters(std::vector<Parameter*>& out) override;
  std::string describe() const override;
  int in_features() const { return in_; }

 private:
  int in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
};

class Sequential final : public Module {
 public:
  Sequential() = default;
  Sequential& add(ModulePtr m);
  template <class M, class... Args>
  Sequential& emplace(Args&&... args) {
    return add(std::make_unique<M>(std::forward<Args>(args)...));
  }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void parameters(std::vector<Parameter*>& out) override;
  void buffers(std::vector<Tensor*>& out) override;
  std::string describe() const override;
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<ModulePtr> layers_;
};

/// body(x) + shortcut(x) (shortcut may be empty = identity), followed by an optional activation.
class Residual final : public Module {
 public:
  Residual(ModulePtr body, ModulePtr shortcut, bool relu_after);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void parameters(std::vector<Parameter*>& out) override;
  void buffers(std::vector<Tensor*>& out) override;
  std::string describe() const override;

 private:
  ModulePtr body_, shortcut_;
  bool relu_after_;
  Tensor output_;
};

/// x * sigmoid(expand(silu(reduce(mean_hw(x))))) per channel.
class SqueezeExcite final : public Module {
 public:
  SqueezeExcite(int channels, int reduced, Rng& rng);
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  void parameters(std::vector<Parameter*>& out) override;
  std::string describe() const override;

 private:
  int c_;
  Conv2d reduce_, expand_;
  Act silu_{Activation::SiLU}, gate_{Activation::Sigmoid};
  Tensor input_, scale_;
};

}  // namespace neolus::nn
