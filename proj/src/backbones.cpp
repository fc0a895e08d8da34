#include <cmath>

#include "neolus/error.hpp"
#include "neolus/model.hpp"

namespace neolus {

using nn::Act;
using nn::Activation;
using nn::BatchNorm2d;
using nn::Conv2d;
using nn::MaxPool2d;
using nn::ModulePtr;
using nn::Residual;
using nn::Sequential;

namespace {

ModulePtr conv_bn(int in, int out, int k, int s, int p, Rng& rng, int groups = 1) {
  auto seq = std::make_unique<Sequential>();
  seq->emplace<Conv2d>(in, out, k, s, p, rng, groups);
  seq->emplace<BatchNorm2d>(out);
  return seq;
}

ModulePtr conv_bn_act(int in, int out, int k, int s, int p, Activation a, Rng& rng, int groups = 1) {
  auto seq = std::make_unique<Sequential>();
  seq->emplace<Conv2d>(in, out, k, s, p, rng, groups);
  seq->emplace<BatchNorm2d>(out);
  seq->emplace<Act>(a);
  return seq;
}

ModulePtr basic_block(int in, int out, int stride, Rng& rng) {
  auto body = std::make_unique<Sequential>();
  body->add(conv_bn_act(in, out, 3, stride, 1, Activation::ReLU, rng));
  body->add(conv_bn(out, out, 3, 1, 1, rng));
  ModulePtr shortcut;
  if (stride != 1 || in != out) shortcut = conv_bn(in, out, 1, stride, 0, rng);
  return std::make_unique<Residual>(std::move(body), std::move(shortcut), true);
}

ModulePtr bottleneck(int in, int width, int stride, Rng& rng) {
  const int out = width * 4;
  auto body = std::make_unique<Sequential>();
  body->add(conv_bn_act(in, width, 1, 1, 0, Activation::ReLU, rng));
  body->add(conv_bn_act(width, width, 3, stride, 1, Activation::ReLU, rng));
  body->add(conv_bn(width, out, 1, 1, 0, rng));
  ModulePtr shortcut;
  if (stride != 1 || in != out) shortcut = conv_bn(in, out, 1, stride, 0, rng);
  return std::make_unique<Residual>(std::move(body), std::move(shortcut), true);
}

std::unique_ptr<Sequential> resnet(const int (&blocks)[4], bool use_bottleneck, Rng& rng) {
  auto t = std::make_unique<Sequential>();
  t->add(conv_bn_act(3, 64, 7, 2, 3, Activation::ReLU, rng));
  t->emplace<MaxPool2d>(3, 2, 1);
  int in = 64;
  const int widths[4] = {64, 128, 256, 512};
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < blocks[stage]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      if (use_bottleneck) {
        t->add(bottleneck(in, widths[stage], stride, rng));
        in = widths[stage] * 4;
      } else {
        t->add(basic_block(in, widths[stage], stride, rng));
        in = widths[stage];
      }
    }
  }
  return t;
}

std::unique_ptr<Sequential> alexnet(Rng& rng) {
  auto t = std::make_unique<Sequential>();
  auto conv_relu = [&](int in, int out, int k, int s, int p) {
    t->emplace<Conv2d>(in, out, k, s, p, rng, 1, true);
    t->emplace<Act>(Activation::ReLU);
  };
  conv_relu(3, 64, 11, 4, 2);
  t->emplace<MaxPool2d>(3, 2, 0);
  conv_relu(64, 192, 5, 1, 2);
  t->emplace<MaxPool2d>(3, 2, 0);
  conv_relu(192, 384, 3, 1, 1);
  conv_relu(384, 256, 3, 1, 1);
  conv_relu(256, 256, 3, 1, 1);
  t->emplace<MaxPool2d>(3, 2, 0);
  return t;
}

// Channel rounding used by the EfficientNet family: nearest multiple of 8, never below 90%.
int make_divisible(double v, int divisor = 8) {
  int nv = std::max(divisor, static_cast<int>(v + divisor / 2.0) / divisor * divisor);
  if (nv < 0.9 * v) nv += divisor;
  return nv;
}

ModulePtr mbconv(int in, int out, int expand, int k, int stride, Rng& rng) {
  auto body = std::make_unique<Sequential>();
  const int mid = in * expand;
  if (expand != 1) body->add(conv_bn_act(in, mid, 1, 1, 0, Activation::SiLU, rng));
  body->add(conv_bn_act(mid, mid, k, stride, (k - 1) / 2, Activation::SiLU, rng, mid));
  body->emplace<nn::SqueezeExcite>(mid, std::max(1, in / 4), rng);
  body->add(conv_bn(mid, out, 1, 1, 0, rng));
  if (stride == 1 && in == out) return std::make_unique<Residual>(std::move(body), nullptr, false);
  return body;
}

std::unique_ptr<Sequential> efficientnet(double width_mult, double depth_mult, Rng& rng) {
  struct Stage {
    int expand, kernel, stride, in, out, repeats;
  };
  const Stage stages[] = {{1, 3, 1, 32, 16, 1},   {6, 3, 2, 16, 24, 2},  {6, 5, 2, 24, 40, 2}, {6, 3, 2, 40, 80, 3},
                          {6, 5, 1, 80, 112, 3},  {6, 5, 2, 112, 192, 4}, {6, 3, 1, 192, 320, 1}};
  auto t = std::make_unique<Sequential>();
  const int stem = make_divisible(32 * width_mult);
  t->add(conv_bn_act(3, stem, 3, 2, 1, Activation::SiLU, rng));
  int in = stem;
  for (const auto& s : stages) {
    const int out = make_divisible(s.out * width_mult);
    const int repeats = static_cast<int>(std::ceil(s.repeats * depth_mult));
    for (int r = 0; r < repeats; ++r) {
      t->add(mbconv(in, out, s.expand, s.kernel, r == 0 ? s.stride : 1, rng));
      in = out;
    }
  }
  t->add(conv_bn_act(in, 4 * in, 1, 1, 0, Activation::SiLU, rng));
  return t;
}

std::unique_ptr<Sequential> tinynet(Rng& rng) {
  auto t = std::make_unique<Sequential>();
  t->add(conv_bn_act(3, 8, 5, 4, 2, Activation::ReLU, rng));
  t->add(conv_bn_act(8, 16, 3, 2, 1, Activation::ReLU, rng));
  t->add(conv_bn_act(16, 32, 3, 2, 1, Activation::ReLU, rng));
  t->add(conv_bn_act(32, 32, 3, 2, 1, Activation::ReLU, rng));
  return t;
}

}  // namespace

std::unique_ptr<nn::Sequential> make_trunk(BackboneName name, Rng& rng) {
  switch (name) {
    case BackboneName::AlexNet: return alexnet(rng);
    case BackboneName::ResNet18: return resnet({2, 2, 2, 2}, false, rng);
    case BackboneName::ResNet34: return resnet({3, 4, 6, 3}, false, rng);
    case BackboneName::ResNet50: return resnet({3, 4, 6, 3}, true, rng);
    case BackboneName::EfficientNetB0: return efficientnet(1.0, 1.0, rng);
    case BackboneName::EfficientNetB1: return efficientnet(1.0, 1.1, rng);
    case BackboneName::EfficientNetB2: return efficientnet(1.1, 1.2, rng);
    case BackboneName::TinyNet: return tinynet(rng);
  }
  throw ConfigError("unknown backbone");
}

}  // namespace neolus
