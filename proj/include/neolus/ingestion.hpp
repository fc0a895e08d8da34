#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "neolus/image.hpp"
#include "neolus/manifest.hpp"

namespace neolus {

inline constexpr int kTrainFramesPerVideo = 10;
inline constexpr int kTestFramesPerVideo = 6;

enum class ExtractionMode { Train, Test };

/// Endpoint-inclusive evenly spaced indices: round(i * (frame_count - 1) / (k - 1)).
/// Returns all frames when frame_count < k. Throws ArgumentError when either count is < 1.
std::vector<int> select_frame_indices(int frame_count, int k);

struct VideoProbe {
  int frame_count = 0;
  int height = 0;
  int width = 0;
};

/// Media access. Implementations must be safe to call concurrently on different files.
class FrameDecoder {
 public:
  virtual ~FrameDecoder() = default;
  virtual bool accepts(const std::filesystem::path& path) const = 0;
  virtual VideoProbe probe(const std::filesystem::path& path) const = 0;
  /// Decodes the requested frames (sorted ascending) as luma.
  virtual std::vector<GrayImage> decode(const std::filesystem::path& path,
                                        std::span<const int> indices) const = 0;
};

/// `.npyish` raw stacks: magic "LUSRAW1\0", u32 frame_count, u16 height, u16 width (little
/// endian), then frame_count row-major u8 frames.
class RawStackDecoder final : public FrameDecoder {
 public:
  bool accepts(const std::filesystem::path& path) const override;
  VideoProbe probe(const std::filesystem::path& path) const override;
  std::vector<GrayImage> decode(const std::filesystem::path& path, std::span<const int> indices) const override;
};

/// Common containers through the `ffprobe`/`ffmpeg` executables found on PATH.
class FfmpegDecoder final : public FrameDecoder {
 public:
  static bool available();
  bool accepts(const std::filesystem::path& path) const override;
  VideoProbe probe(const std::filesystem::path& path) const override;
  std::vector<GrayImage> decode(const std::filesystem::path& path, std::span<const int> indices) const override;
};

/// Picks the first decoder that accepts a path. Default order: raw stacks, then ffmpeg.
class DecoderRegistry {
 public:
  static DecoderRegistry with_defaults();
  void add(std::shared_ptr<const FrameDecoder> decoder);
  const FrameDecoder& for_path(const std::filesystem::path& path) const;

 private:
  std::vector<std::shared_ptr<const FrameDecoder>> decoders_;
};

void write_raw_stack(const std::filesystem::path& path, std::span<const GrayImage> frames);

/// BT.601 luma of interleaved RGB8.
GrayImage rgb_to_luma(std::span<const std::uint8_t> rgb, int height, int width);

/// Decodes the policy frames of one video. Throws IngestionError (carrying video_id) when the
/// media cannot be decoded; a frame count disagreeing with the manifest logs a warning and the
/// probed count is used.
std::vector<FrameRecord> extract_frames(const VideoRecord& video, ExtractionMode mode,
                                        const DecoderRegistry& decoders);

}  // namespace neolus
