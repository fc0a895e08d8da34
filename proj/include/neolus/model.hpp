#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neolus/image.hpp"
#include "neolus/nn/layers.hpp"
#include "neolus/pooling.hpp"
#include "neolus/task.hpp"

namespace neolus {

/// `tinynet` is a four-convolution stand-in small enough to train on a laptop CPU.
enum class BackboneName { AlexNet, ResNet18, ResNet34, ResNet50, EfficientNetB0, EfficientNetB1, EfficientNetB2, TinyNet };

std::string_view to_string(BackboneName b);
std::string_view to_string(PoolingKind p);
BackboneName parse_backbone(std::string_view s);  // ConfigError on unknown names
PoolingKind parse_pooling(std::string_view s);
const std::vector<BackboneName>& all_backbones();

/// Native input height: 224 for AlexNet/ResNet/B0/tinynet, 240 for B1, 260 for B2.
int standard_input_height(BackboneName b);

struct BackboneSpec {
  BackboneName name = BackboneName::ResNet34;
  int input_height = 224;
  int input_width = kInputWidth;
  bool pretrained = true;

  static BackboneSpec standard(BackboneName name, bool pretrained = true);
  /// Rejects heights that do not match the backbone's native resolution.
  void validate() const;
};

struct HeadSpec {
  PoolingKind pooling = PoolingKind::GlobalAverage;
  Task task = Task::Classification;
};

/// Trunk parameters and buffers in module traversal order.
struct TrunkWeights {
  std::vector<std::vector<float>> parameters;
  std::vector<std::vector<float>> buffers;
};

/// Source of pretrained trunk weights.
class WeightProvider {
 public:
  virtual ~WeightProvider() = default;
  virtual std::optional<TrunkWeights> weights_for(const BackboneSpec& spec) const = 0;
};

/// Looks for `<dir>/<backbone>.trunk` files written by `save_trunk_weights`.
class DirectoryWeightProvider final : public WeightProvider {
 public:
  explicit DirectoryWeightProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<TrunkWeights> weights_for(const BackboneSpec& spec) const override;

 private:
  std::filesystem::path dir_;
};

/// Convolutional trunk for a backbone (classifier layers removed).
std::unique_ptr<nn::Sequential> make_trunk(BackboneName name, Rng& rng);

/// Trunk -> pooling head -> Linear(., 1) [-> sigmoid for classification].
class Model {
 public:
  Model(BackboneSpec backbone, HeadSpec head, std::unique_ptr<nn::Sequential> trunk, std::uint64_t seed);

  const BackboneSpec& backbone() const { return backbone_; }
  const HeadSpec& head() const { return head_; }
  /// Trunk output (C, W') probed by a shape-only dry run at the configured input size.
  int feature_channels() const { return feature_.c; }
  int feature_height() const { return feature_.h; }
  int feature_width() const { return feature_.w; }
  int head_in_features() const { return linear_->in_features(); }
  std::size_t parameter_count();

  /// Grayscale frames replicated to 3 channels. Throws ArgumentError on a size mismatch.
  nn::Tensor make_batch(std::span<const FrameTensor* const> frames) const;
  /// Raw head output N x 1 x 1 x 1: a logit for classification, the normalized SF for regression.
  nn::Tensor forward_raw(const nn::Tensor& batch, bool training);
  /// Gradient w.r.t. the raw output; accumulates parameter gradients.
  void backward(const nn::Tensor& grad_raw);
  /// Output scores: sick-class probability (classification) or unclamped normalized SF.
  std::vector<float> predict(std::span<const FrameTensor* const> frames, int batch_size = 16);
  nn::Tensor trunk_features(const nn::Tensor& batch);

  std::vector<nn::Parameter*> parameters();
  std::vector<nn::Tensor*> buffers();
  std::vector<nn::Parameter*> trunk_parameters();
  std::vector<nn::Tensor*> trunk_buffers();

  /// Copy of all parameters and buffers, for best-checkpoint bookkeeping.
  std::vector<std::vector<float>> snapshot();
  void restore(const std::vector<std::vector<float>>& state);

 private:
  BackboneSpec backbone_;
  HeadSpec head_;
  std::unique_ptr<nn::Sequential> trunk_;
  std::unique_ptr<PoolingLayer> pool_;
  std::unique_ptr<nn::Linear> linear_;
  nn::Shape feature_;
  nn::Shape pooled_shape_;
};

/// Assembles a model; with `pretrained` set, trunk weights come from `provider` when it has
/// them (a warning is logged and random initialization kept otherwise).
Model build_model(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed = 0,
                  const WeightProvider* provider = nullptr);

struct CheckpointMeta {
  double sf_clip = 450.0;
  double sf_norm = 450.0;
  bool center_crop = false;  // evaluation uses a centred R x R crop (random-crop ablation)
};

/// Single-file archive: magic "NEOLUSCK", u32 version, u64 header length, JSON header
/// (backbone, head, preprocessing rows, metadata, tensor sizes), then little-endian float32 blobs.
void save_checkpoint(Model& model, const CheckpointMeta& meta, const std::filesystem::path& path);
struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

void save_trunk_weights(Model& model, const std::filesystem::path& path);

}  // namespace neolus
