#pragma once

#include <cstdint>

#include "neolus/image.hpp"
#include "neolus/rng.hpp"

namespace neolus {

inline constexpr double kMaxRotationDegrees = 10.0;
inline constexpr double kMaxPhotometricRange = 0.25;

/// Bilinear resize (half-pixel centres, replicated border) to width 461 preserving aspect,
/// scaling to [0, 1], then keeping rows [0, R) with zero padding below short images.
FrameTensor preprocess(const FrameRecord& frame, int rows, int width = kInputWidth);

/// Generic bilinear resize of a [0, 1] float image.
FrameTensor resize_bilinear(const FrameTensor& src, int height, int width);

/// Reverses column order. There is no vertical flip: it would put the pleural line upside down.
FrameTensor hflip(const FrameTensor& t);

/// Rotation about the image centre by `degrees` (counter-clockwise on screen), bilinear, black
/// fill. Throws ArgumentError when |degrees| > 10.
FrameTensor rotate(const FrameTensor& t, double degrees);

/// x <- x * brightness, then x <- m + contrast * (x - m) with m the post-brightness mean, clamped.
/// Factors must lie in [0.75, 1.25].
FrameTensor photometric(const FrameTensor& t, double brightness, double contrast);

/// Square crop of side `size` starting at column `left` (ablation only).
FrameTensor crop_columns(const FrameTensor& t, int left, int size);

struct AugmentationConfig {
  bool hflip = true;
  double hflip_probability = 0.5;
  bool rotation = true;
  double rotation_degrees = kMaxRotationDegrees;  // symmetric range [-d, d]
  bool photometric = true;
  double photometric_range = kMaxPhotometricRange;  // factors drawn from [1 - r, 1 + r]
  bool random_crop = false;                         // ablation: random R x R crop
  std::uint64_t seed = 0;

  /// Throws ArgumentError when a range exceeds its allowed bound.
  void validate() const;
};

/// One draw from the augmentation sampler.
struct AugmentationSample {
  bool flip = false;
  double angle = 0.0;
  double brightness = 1.0;
  double contrast = 1.0;
  int crop_left = -1;  // < 0 means no crop
};

/// Draws every enabled parameter from `rng`. Disabled augmentations consume no randomness.
AugmentationSample sample_augmentation(const AugmentationConfig& cfg, Rng& rng, int width = kInputWidth,
                                       int crop_size = 0);

/// Applies hflip -> rotate -> photometric (-> crop when requested) in that fixed order.
FrameTensor apply_augmentation(const FrameTensor& t, const AugmentationSample& s);

FrameTensor augment(const FrameTensor& t, const AugmentationConfig& cfg, Rng& rng);

/// Label summarising enabled augmentations, e.g. "hflip+rot+photo" or "none".
std::string augmentation_label(const AugmentationConfig& cfg);

}  // namespace neolus
