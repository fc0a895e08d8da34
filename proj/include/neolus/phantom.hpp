#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "neolus/image.hpp"
#include "neolus/manifest.hpp"
#include "neolus/rng.hpp"

namespace neolus {

/// Synthetic lung-ultrasound dataset parameters. Healthy patients get one session; diseased
/// patients get a session count drawn from `sessions_per_patient` clamped to [2, 3], the last
/// one healed.
struct PhantomSpec {
  int n_patients = 40;
  int sessions_min = 1;
  int sessions_max = 2;
  int videos_per_session = 2;
  int frames_per_video = 12;
  int height = 512;
  int width = kInputWidth;
  int rib_shadows_min = 0;
  int rib_shadows_max = 3;
  double speckle = 0.5;          // multiplicative speckle mix in [0, 1]
  double healthy_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;  // ArgumentError
};

std::string phantom_spec_to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const std::string& text);

/// Ground-truth law: 450 - 280 s + U(-10, 10), clamped to [90, 460].
double phantom_sf(double severity, Rng& rng);
inline constexpr double kHealthyGrammarMax = 0.15;

/// Per-video geometry shared by its frames (pleural line, B-line columns, rib shadows).
struct PhantomScene {
  double severity = 0.0;
  double pleura_row = 60.0;
  double curvature = 0.0;
  std::vector<double> irregularity_phase;
  int a_lines = 0;
  std::vector<double> b_line_columns;
  struct Rib {
    double center;
    double half_width;
  };
  std::vector<Rib> ribs;
};

PhantomScene make_scene(double severity, Rng& rng, const PhantomSpec& spec = {});
GrayImage render_frame(const PhantomScene& scene, Rng& rng, const PhantomSpec& spec = {});

/// One frame with a fresh scene drawn from `rng`.
FrameRecord generate_frame(double severity, Rng& rng, const PhantomSpec& spec = {});

/// Pleural-line row at column `x` for frame-invariant geometry (used for region measurements).
double pleura_row_at(const PhantomScene& scene, double x, int width);

struct PhantomDataset {
  Manifest manifest;
  std::map<std::string, double> severity;  // by session_id
};

/// Writes `<out>/manifest.csv`, `<out>/sessions.csv` (session_id,severity,sf_value) and
/// `<out>/videos/<video_id>.npyish`. Byte-identical for identical specs.
PhantomDataset generate_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir);

}  // namespace neolus
