#include "neolus/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "neolus/error.hpp"
#include "neolus/log.hpp"

namespace neolus {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Separable bilinear with half-pixel centres; `src` sampled through the accessor.
template <class Get>
FrameTensor resample(int src_h, int src_w, int dst_h, int dst_w, Get&& get) {
  FrameTensor out(dst_h, dst_w);
  const double sy = static_cast<double>(src_h) / dst_h;
  const double sx = static_cast<double>(src_w) / dst_w;
  std::vector<int> x0(dst_w), x1(dst_w);
  std::vector<double> wx(dst_w);
  for (int x = 0; x < dst_w; ++x) {
    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
    x0[x] = static_cast<int>(std::floor(fx));
    x1[x] = std::min(x0[x] + 1, src_w - 1);
    wx[x] = fx - x0[x];
  }
  for (int y = 0; y < dst_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double top = get(y0, x0[x]) * (1.0 - wx[x]) + get(y0, x1[x]) * wx[x];
      const double bot = get(y1, x0[x]) * (1.0 - wx[x]) + get(y1, x1[x]) * wx[x];
      out.at(y, x) = clamp01(top * (1.0 - wy) + bot * wy);
    }
  }
  return out;
}

void check_factor(double f, const char* name) {
  if (!(f >= 1.0 - kMaxPhotometricRange - 1e-12 && f <= 1.0 + kMaxPhotometricRange + 1e-12))
    throw ArgumentError(std::string(name) + " factor " + std::to_string(f) + " outside [0.75, 1.25]");
}

}  // namespace

FrameTensor resize_bilinear(const FrameTensor& src, int height, int width) {
  if (height < 1 || width < 1) throw ArgumentError("resize target must be positive");
  if (src.height == height && src.width == width) return src;
  FrameTensor out = resample(src.height, src.width, height, width, [&](int r, int c) { return src.at(r, c); });
  out.frame_id = src.frame_id;
  return out;
}

FrameTensor preprocess(const FrameRecord& frame, int rows, int width) {
  const GrayImage& img = frame.pixels;
  if (img.width < 1 || img.height < 1) throw ArgumentError("frame '" + frame.frame_id + "' is empty");
  if (rows < 1 || width < 1) throw ArgumentError("preprocess target must be positive");
  const int scaled_h =
      std::max(1, static_cast<int>(std::lround(static_cast<double>(img.height) * width / img.width)));
  const int kept = std::min(rows, scaled_h);
  if (kept < rows)
    log_warning("frame '" + frame.frame_id + "': scaled height " + std::to_string(scaled_h) + " < " +
                std::to_string(rows) + " rows; padded with zeros");
  FrameTensor scaled;
  if (img.width == width && img.height == scaled_h) {
    scaled = FrameTensor(scaled_h, width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) scaled.pixels[i] = img.pixels[i] / 255.0f;
  } else {
    // Only the first `kept` output rows are needed; resample the full geometry and discard.
    scaled = resample(img.height, img.width, scaled_h, width,
                      [&](int r, int c) { return img.at(r, c) / 255.0; });
  }
  FrameTensor out(rows, width, 0.0f);
  std::copy_n(scaled.pixels.begin(), static_cast<std::size_t>(kept) * width, out.pixels.begin());
  out.frame_id = frame.frame_id;
  return out;
}

FrameTensor hflip(const FrameTensor& t) {
  FrameTensor out = t;
  for (int r = 0; r < t.height; ++r) {
    auto row = out.pixels.begin() + static_cast<std::ptrdiff_t>(r) * t.width;
    std::reverse(row, row + t.width);
  }
  return out;
}

FrameTensor rotate(const FrameTensor& t, double degrees) {
  if (!(std::abs(degrees) <= kMaxRotationDegrees))
    throw ArgumentError("rotation " + std::to_string(degrees) + " outside [-10, 10] degrees");
  if (degrees == 0.0) return t;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cy = (t.height - 1) / 2.0;
  const double cx = (t.width - 1) / 2.0;
  FrameTensor out(t.height, t.width, 0.0f);
  out.frame_id = t.frame_id;
  auto sample = [&](int r, int c) -> double {
    return (r < 0 || c < 0 || r >= t.height || c >= t.width) ? 0.0 : t.at(r, c);
  };
  for (int y = 0; y < t.height; ++y) {
    const double dy = y - cy;
    for (int x = 0; x < t.width; ++x) {
      const double dx = x - cx;
      // Inverse map: screen y points down, so a counter-clockwise turn uses (+sin) on dy.
      const double sx = cx + cs * dx - sn * dy;
      const double sy = cy + sn * dx + cs * dy;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      if (fx < -1 || fy < -1 || fx >= t.width || fy >= t.height) continue;
      const int ix = static_cast<int>(fx);
      const int iy = static_cast<int>(fy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      const double v = (sample(iy, ix) * (1 - ax) + sample(iy, ix + 1) * ax) * (1 - ay) +
                       (sample(iy + 1, ix) * (1 - ax) + sample(iy + 1, ix + 1) * ax) * ay;
      out.at(y, x) = clamp01(v);
    }
  }
  return out;
}

FrameTensor photometric(const FrameTensor& t, double brightness, double contrast) {
  check_factor(brightness, "brightness");
  check_factor(contrast, "contrast");
  if (brightness == 1.0 && contrast == 1.0) return t;
  FrameTensor out = t;
  double sum = 0.0;
  for (float v : t.pixels) sum += v * brightness;
  const double mean = t.pixels.empty() ? 0.0 : sum / static_cast<double>(t.pixels.size());
  for (auto& v : out.pixels) v = clamp01(mean + contrast * (v * brightness - mean));
  return out;
}

FrameTensor crop_columns(const FrameTensor& t, int left, int size) {
  if (size < 1 || left < 0 || left + size > t.width) throw ArgumentError("crop window outside the frame");
  FrameTensor out(t.height, size);
  out.frame_id = t.frame_id;
  for (int r = 0; r < t.height; ++r)
    std::copy_n(t.pixels.begin() + static_cast<std::ptrdiff_t>(r) * t.width + left, size,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(r) * size);
  return out;
}

void AugmentationConfig::validate() const {
  if (!(hflip_probability >= 0.0 && hflip_probability <= 1.0))
    throw ArgumentError("hflip probability must lie in [0, 1]");
  if (!(rotation_degrees >= 0.0 && rotation_degrees <= kMaxRotationDegrees))
    throw ArgumentError("rotation range must lie within [-10, 10] degrees");
  if (!(photometric_range >= 0.0 && photometric_range <= kMaxPhotometricRange))
    throw ArgumentError("photometric range must lie within +-25%");
}

AugmentationSample sample_augmentation(const AugmentationConfig& cfg, Rng& rng, int width, int crop_size) {
  AugmentationSample s;
  if (cfg.hflip) s.flip = rng.bernoulli(cfg.hflip_probability);
  if (cfg.rotation) s.angle = rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees);
  if (cfg.photometric) {
    s.brightness = rng.uniform(1.0 - cfg.photometric_range, 1.0 + cfg.photometric_range);
    s.contrast = rng.uniform(1.0 - cfg.photometric_range, 1.0 + cfg.photometric_range);
  }
  if (cfg.random_crop && crop_size > 0 && crop_size <= width) s.crop_left = rng.integer(0, width - crop_size);
  return s;
}

FrameTensor apply_augmentation(const FrameTensor& t, const AugmentationSample& s) {
  FrameTensor out = s.flip ? hflip(t) : t;
  if (s.angle != 0.0) out = rotate(out, s.angle);
  if (s.brightness != 1.0 || s.contrast != 1.0) out = photometric(out, s.brightness, s.contrast);
  if (s.crop_left >= 0) out = crop_columns(out, s.crop_left, t.height);
  return out;
}

FrameTensor augment(const FrameTensor& t, const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  return apply_augmentation(t, sample_augmentation(cfg, rng, t.width, cfg.random_crop ? t.height : 0));
}

std::string augmentation_label(const AugmentationConfig& cfg) {
  std::string label;
  auto add = [&](const char* part) {
    if (!label.empty()) label += "+";
    label += part;
  };
  if (cfg.hflip) add("hflip");
  if (cfg.rotation) add("rot");
  if (cfg.photometric) add("photo");
  if (cfg.random_crop) add("crop");
  return label.empty() ? "none" : label;
}

}  // namespace neolus
