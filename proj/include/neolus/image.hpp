#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace neolus {

inline constexpr int kInputWidth = 461;

/// Native-resolution 8-bit grayscale image, row-major.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}
  std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

struct FrameRecord {
  std::string frame_id;
  std::string video_id;
  int frame_index = 0;
  GrayImage pixels;
};

/// Preprocessed frame: R x 461 by default, values in [0, 1].
struct FrameTensor {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  std::string frame_id;

  FrameTensor() = default;
  FrameTensor(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}
  float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

}  // namespace neolus
