#include "neolus/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "neolus/error.hpp"
#include "neolus/log.hpp"

namespace neolus {

namespace {

constexpr char kRawMagic[8] = {'L', 'U', 'S', 'R', 'A', 'W', '1', '\0'};
constexpr std::size_t kRawHeaderSize = 16;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

VideoProbe read_raw_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char header[kRawHeaderSize];
  if (!in.read(reinterpret_cast<char*>(header), kRawHeaderSize))
    throw IngestionError(path.stem().string(), "truncated raw stack header");
  if (std::memcmp(header, kRawMagic, sizeof kRawMagic) != 0)
    throw IngestionError(path.stem().string(), "bad raw stack magic");
  VideoProbe probe;
  probe.frame_count = static_cast<int>(read_u32(header + 8));
  probe.height = read_u16(header + 12);
  probe.width = read_u16(header + 14);
  if (probe.frame_count < 1 || probe.height < 1 || probe.width < 1)
    throw IngestionError(path.stem().string(), "degenerate raw stack dimensions");
  return probe;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

struct PipeCloser {
  void operator()(FILE* f) const {
    if (f) pclose(f);
  }
};

std::string run_capture(const std::string& cmd) {
  std::unique_ptr<FILE, PipeCloser> pipe(popen(cmd.c_str(), "r"));
  if (!pipe) throw IoError("cannot spawn: " + cmd);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), n);
  return out;
}

}  // namespace

std::vector<int> select_frame_indices(int frame_count, int k) {
  if (frame_count < 1) throw ArgumentError("frame_count must be >= 1");
  if (k < 1) throw ArgumentError("k must be >= 1");
  std::vector<int> out;
  if (frame_count <= k) {
    for (int i = 0; i < frame_count; ++i) out.push_back(i);
    return out;
  }
  if (k == 1) return {0};
  // Exact round-half-up of i*(n-1)/(k-1) in integer arithmetic.
  const long long num = frame_count - 1;
  const long long den = k - 1;
  for (long long i = 0; i < k; ++i) {
    out.push_back(static_cast<int>((2 * i * num + den) / (2 * den)));
  }
  return out;
}

bool RawStackDecoder::accepts(const std::filesystem::path& path) const { return path.extension() == ".npyish"; }

VideoProbe RawStackDecoder::probe(const std::filesystem::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.stem().string(), "cannot open '" + path.string() + "'");
  return read_raw_header(in, path);
}

std::vector<GrayImage> RawStackDecoder::decode(const std::filesystem::path& path,
                                               std::span<const int> indices) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.stem().string(), "cannot open '" + path.string() + "'");
  const VideoProbe probe = read_raw_header(in, path);
  const std::size_t frame_bytes = static_cast<std::size_t>(probe.height) * probe.width;
  std::vector<GrayImage> frames;
  frames.reserve(indices.size());
  for (int idx : indices) {
    if (idx < 0 || idx >= probe.frame_count)
      throw IngestionError(path.stem().string(), "frame index " + std::to_string(idx) + " out of range");
    GrayImage img(probe.height, probe.width);
    in.seekg(static_cast<std::streamoff>(kRawHeaderSize + frame_bytes * static_cast<std::size_t>(idx)));
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(frame_bytes)))
      throw IngestionError(path.stem().string(), "truncated frame " + std::to_string(idx));
    frames.push_back(std::move(img));
  }
  return frames;
}

bool FfmpegDecoder::available() {
  return std::system("ffprobe -version >/dev/null 2>&1") == 0 && std::system("ffmpeg -version >/dev/null 2>&1") == 0;
}

bool FfmpegDecoder::accepts(const std::filesystem::path& path) const { return path.extension() != ".npyish"; }

VideoProbe FfmpegDecoder::probe(const std::filesystem::path& path) const {
  const std::string out = run_capture(
      "ffprobe -v error -count_frames -select_streams v:0 -show_entries stream=width,height,nb_read_frames "
      "-of csv=p=0 " +
      shell_quote(path.string()) + " 2>/dev/null");
  VideoProbe probe;
  char comma;
  std::istringstream is(out);
  if (!(is >> probe.width >> comma >> probe.height >> comma >> probe.frame_count) || probe.frame_count < 1)
    throw IngestionError(path.stem().string(), "ffprobe could not read '" + path.string() + "'");
  return probe;
}

std::vector<GrayImage> FfmpegDecoder::decode(const std::filesystem::path& path,
                                             std::span<const int> indices) const {
  const VideoProbe probe = this->probe(path);
  const std::string raw = run_capture("ffmpeg -v error -i " + shell_quote(path.string()) +
                                      " -map 0:v:0 -f rawvideo -pix_fmt rgb24 - 2>/dev/null");
  const std::size_t frame_bytes = static_cast<std::size_t>(probe.width) * probe.height * 3;
  const std::size_t decoded = raw.size() / frame_bytes;
  std::vector<GrayImage> frames;
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= decoded)
      throw IngestionError(path.stem().string(), "frame index " + std::to_string(idx) + " not decodable");
    const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data()) + frame_bytes * static_cast<std::size_t>(idx);
    frames.push_back(rgb_to_luma({p, frame_bytes}, probe.height, probe.width));
  }
  return frames;
}

DecoderRegistry DecoderRegistry::with_defaults() {
  DecoderRegistry r;
  r.add(std::make_shared<RawStackDecoder>());
  r.add(std::make_shared<FfmpegDecoder>());
  return r;
}

void DecoderRegistry::add(std::shared_ptr<const FrameDecoder> decoder) { decoders_.push_back(std::move(decoder)); }

const FrameDecoder& DecoderRegistry::for_path(const std::filesystem::path& path) const {
  for (const auto& d : decoders_)
    if (d->accepts(path)) return *d;
  throw IngestionError(path.stem().string(), "no decoder for '" + path.string() + "'");
}

void write_raw_stack(const std::filesystem::path& path, std::span<const GrayImage> frames) {
  if (frames.empty()) throw ArgumentError("raw stack needs at least one frame");
  const int h = frames.front().height;
  const int w = frames.front().width;
  if (h < 1 || w < 1 || h > 0xffff || w > 0xffff) throw ArgumentError("raw stack frame size out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  unsigned char header[kRawHeaderSize];
  std::memcpy(header, kRawMagic, sizeof kRawMagic);
  const auto n = static_cast<std::uint32_t>(frames.size());
  for (int i = 0; i < 4; ++i) header[8 + i] = static_cast<unsigned char>(n >> (8 * i));
  header[12] = static_cast<unsigned char>(h & 0xff);
  header[13] = static_cast<unsigned char>(h >> 8);
  header[14] = static_cast<unsigned char>(w & 0xff);
  header[15] = static_cast<unsigned char>(w >> 8);
  out.write(reinterpret_cast<const char*>(header), kRawHeaderSize);
  for (const auto& f : frames) {
    if (f.height != h || f.width != w) throw ArgumentError("raw stack frames must share one size");
    out.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
  }
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

GrayImage rgb_to_luma(std::span<const std::uint8_t> rgb, int height, int width) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3) throw ArgumentError("rgb buffer size mismatch");
  GrayImage img(height, width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(y + 0.5, 0.0, 255.0));
  }
  return img;
}

std::vector<FrameRecord> extract_frames(const VideoRecord& video, ExtractionMode mode,
                                        const DecoderRegistry& decoders) {
  const int k = mode == ExtractionMode::Train ? kTrainFramesPerVideo : kTestFramesPerVideo;
  std::vector<GrayImage> images;
  std::vector<int> indices;
  try {
    const FrameDecoder& decoder = decoders.for_path(video.source_path);
    VideoProbe probe = decoder.probe(video.source_path);
    if (probe.frame_count != video.frame_count) {
      log_warning("video '" + video.video_id + "': manifest frame_count " + std::to_string(video.frame_count) +
                  " but media reports " + std::to_string(probe.frame_count) + "; re-probed count used");
      probe = decoder.probe(video.source_path);
    }
    indices = select_frame_indices(probe.frame_count, k);
    images = decoder.decode(video.source_path, indices);
  } catch (const IngestionError& e) {
    throw IngestionError(video.video_id, e.what());
  } catch (const Error& e) {
    throw IngestionError(video.video_id, e.what());
  }
  std::vector<FrameRecord> frames;
  frames.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    frames.push_back({video.video_id + "#" + std::to_string(indices[i]), video.video_id, indices[i],
                      std::move(images[i])});
  }
  return frames;
}

}  // namespace neolus
