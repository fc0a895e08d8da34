#pragma once

#include <vector>

#include "neolus/nn/layers.hpp"

namespace neolus::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // L2 added to the gradient of decaying parameters
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions opts);
  void zero_grad();
  void step();
  const AdamOptions& options() const { return opts_; }
  void set_learning_rate(double lr) { opts_.learning_rate = lr; }
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions opts_;
  std::vector<std::vector<float>> m_, v_;
  long t_ = 0;
};

}  // namespace neolus::nn
