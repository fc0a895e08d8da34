#include <doctest.h>

#include <fstream>

#include "neolus/error.hpp"
#include "neolus/ingestion.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

std::vector<GrayImage> ramp_frames(int n, int h = 5, int w = 7) {
  std::vector<GrayImage> frames;
  for (int i = 0; i < n; ++i) {
    GrayImage g(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) g.at(r, c) = static_cast<std::uint8_t>((i * 31 + r * 7 + c) % 256);
    frames.push_back(g);
  }
  return frames;
}

VideoRecord video_at(const std::filesystem::path& p, int count) {
  return {"vid", "sess", p, count, 30.0, 7, 5};
}

}  // namespace

TEST_CASE("frame indices are evenly spaced and include endpoints") {
  CHECK(select_frame_indices(100, 10) == std::vector<int>{0, 11, 22, 33, 44, 55, 66, 77, 88, 99});
  CHECK(select_frame_indices(11, 6) == std::vector<int>{0, 2, 4, 6, 8, 10});
  CHECK(select_frame_indices(4, 6) == std::vector<int>{0, 1, 2, 3});
  CHECK(select_frame_indices(1, 10) == std::vector<int>{0});
  CHECK(select_frame_indices(7, 1) == std::vector<int>{0});
  CHECK_THROWS_AS(select_frame_indices(0, 6), ArgumentError);
}

TEST_CASE("frame index policy holds for every count up to 500") {
  for (int n = 1; n <= 500; ++n) {
    for (int k : {kTrainFramesPerVideo, kTestFramesPerVideo}) {
      const auto idx = select_frame_indices(n, k);
      CHECK(static_cast<int>(idx.size()) == std::min(n, k));
      CHECK(std::is_sorted(idx.begin(), idx.end()));
      CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
      CHECK(idx.front() == 0);
      CHECK(idx.back() == n - 1);
    }
  }
}

TEST_CASE("round(i (n-1) / (k-1)) with half-up rounding") {
  // 5 * 3 / 2 = 7.5 rounds up to 8
  CHECK(select_frame_indices(16, 3) == std::vector<int>{0, 8, 15});
}

TEST_CASE("raw stacks round-trip and decode selected frames") {
  testing::TempDir dir;
  const auto frames = ramp_frames(9);
  write_raw_stack(dir / "a.npyish", frames);
  RawStackDecoder dec;
  CHECK(dec.accepts(dir / "a.npyish"));
  const auto probe = dec.probe(dir / "a.npyish");
  CHECK(probe.frame_count == 9);
  CHECK(probe.height == 5);
  CHECK(probe.width == 7);
  const std::vector<int> idx = {0, 4, 8};
  const auto got = dec.decode(dir / "a.npyish", idx);
  REQUIRE(got.size() == 3);
  CHECK(got[1].pixels == frames[4].pixels);
}

TEST_CASE("extract_frames applies the policy and names frames") {
  testing::TempDir dir;
  write_raw_stack(dir / "v.npyish", ramp_frames(30));
  const auto reg = DecoderRegistry::with_defaults();
  const auto train = extract_frames(video_at(dir / "v.npyish", 30), ExtractionMode::Train, reg);
  const auto test = extract_frames(video_at(dir / "v.npyish", 30), ExtractionMode::Test, reg);
  CHECK(train.size() == 10);
  CHECK(test.size() == 6);
  CHECK(test.front().frame_id == "vid#0");
  CHECK(test.back().frame_id == "vid#29");
  CHECK(test.back().frame_index == 29);
}

TEST_CASE("frame count disagreement warns and uses the probed count") {
  testing::TempDir dir;
  write_raw_stack(dir / "v.npyish", ramp_frames(8));
  testing::WarningCapture cap;
  const auto frames =
      extract_frames(video_at(dir / "v.npyish", 40), ExtractionMode::Test, DecoderRegistry::with_defaults());
  CHECK(frames.size() == 6);
  CHECK(frames.back().frame_index == 7);
  CHECK(cap.warnings.size() == 1);
}

TEST_CASE("undecodable media raise IngestionError carrying the video id") {
  testing::TempDir dir;
  {
    std::ofstream(dir / "bad.npyish") << "not a stack";
  }
  const auto reg = DecoderRegistry::with_defaults();
  try {
    extract_frames(video_at(dir / "bad.npyish", 3), ExtractionMode::Test, reg);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(e.video_id() == "vid");
  }
  CHECK_THROWS_AS(extract_frames(video_at(dir / "missing.npyish", 3), ExtractionMode::Test, reg), IngestionError);
}

TEST_CASE("luma conversion") {
  const std::vector<std::uint8_t> rgb = {255, 255, 255, 0, 0, 0, 255, 0, 0};
  const auto g = rgb_to_luma(rgb, 1, 3);
  CHECK(g.at(0, 0) == 255);
  CHECK(g.at(0, 1) == 0);
  CHECK(g.at(0, 2) == 76);
}

TEST_CASE("ffmpeg decoding when the tools are installed") {
  if (!FfmpegDecoder::available()) {
    MESSAGE("ffmpeg not on PATH; skipped");
    return;
  }
  testing::TempDir dir;
  const auto mp4 = dir / "clip.mp4";
  const std::string cmd = "ffmpeg -loglevel error -f lavfi -i testsrc=size=64x48:rate=10 -frames:v 12 -pix_fmt yuv420p \"" +
                          mp4.string() + "\"";
  REQUIRE(std::system(cmd.c_str()) == 0);
  FfmpegDecoder dec;
  CHECK(dec.probe(mp4).frame_count == 12);
  const std::vector<int> idx = {0, 11};
  const auto frames = dec.decode(mp4, idx);
  CHECK(frames.size() == 2);
  CHECK(frames[0].width == 64);
}
