#include "neolus/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "neolus/csv.hpp"
#include "neolus/error.hpp"
#include "neolus/ingestion.hpp"

namespace neolus {

namespace {

double gauss(double d, double sigma) { return std::exp(-0.5 * d * d / (sigma * sigma)); }

std::string pad3(int i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

void PhantomSpec::validate() const {
  if (n_patients < 1) throw ArgumentError("phantom: n_patients must be >= 1");
  if (sessions_min < 1 || sessions_max < sessions_min) throw ArgumentError("phantom: bad sessions_per_patient range");
  if (videos_per_session < 1 || frames_per_video < 1) throw ArgumentError("phantom: counts must be >= 1");
  if (height < 32 || width < 64 || height > 4096 || width > 4096) throw ArgumentError("phantom: bad image size");
  if (rib_shadows_min < 0 || rib_shadows_max < rib_shadows_min) throw ArgumentError("phantom: bad rib shadow range");
  if (!(speckle >= 0.0 && speckle <= 1.0)) throw ArgumentError("phantom: speckle must lie in [0, 1]");
  if (!(healthy_fraction >= 0.0 && healthy_fraction <= 1.0))
    throw ArgumentError("phantom: healthy_fraction must lie in [0, 1]");
}

std::string phantom_spec_to_json(const PhantomSpec& s) {
  nlohmann::ordered_json j;
  j["n_patients"] = s.n_patients;
  j["sessions_per_patient"] = {s.sessions_min, s.sessions_max};
  j["videos_per_session"] = s.videos_per_session;
  j["frames_per_video"] = s.frames_per_video;
  j["image_size"] = {s.height, s.width};
  j["rib_shadow_count"] = {s.rib_shadows_min, s.rib_shadows_max};
  j["speckle"] = s.speckle;
  j["healthy_fraction"] = s.healthy_fraction;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

PhantomSpec phantom_spec_from_json(const std::string& text) {
  PhantomSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.n_patients = j.value("n_patients", s.n_patients);
    if (j.contains("sessions_per_patient")) {
      s.sessions_min = j["sessions_per_patient"].at(0).get<int>();
      s.sessions_max = j["sessions_per_patient"].at(1).get<int>();
    }
    s.videos_per_session = j.value("videos_per_session", s.videos_per_session);
    s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
    if (j.contains("image_size")) {
      s.height = j["image_size"].at(0).get<int>();
      s.width = j["image_size"].at(1).get<int>();
    }
    if (j.contains("rib_shadow_count")) {
      s.rib_shadows_min = j["rib_shadow_count"].at(0).get<int>();
      s.rib_shadows_max = j["rib_shadow_count"].at(1).get<int>();
    }
    s.speckle = j.value("speckle", s.speckle);
    s.healthy_fraction = j.value("healthy_fraction", s.healthy_fraction);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

double phantom_sf(double severity, Rng& rng) {
  return std::clamp(450.0 - 280.0 * severity + rng.uniform(-10.0, 10.0), 90.0, 460.0);
}

PhantomScene make_scene(double severity, Rng& rng, const PhantomSpec& spec) {
  if (!(severity >= 0.0 && severity <= 1.0)) throw ArgumentError("severity must lie in [0, 1]");
  PhantomScene s;
  s.severity = severity;
  s.pleura_row = 60.0 + rng.uniform(-10.0, 10.0);
  s.curvature = rng.uniform(-8.0, 8.0);
  for (int i = 0; i < 3; ++i) s.irregularity_phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  s.a_lines = rng.integer(1, 3);
  if (severity > kHealthyGrammarMax) {
    const int n = static_cast<int>(std::ceil(8.0 * severity));
    for (int i = 0; i < n; ++i) s.b_line_columns.push_back(rng.uniform(20.0, spec.width - 20.0));
  }
  const int ribs = rng.integer(spec.rib_shadows_min, spec.rib_shadows_max);
  for (int i = 0; i < ribs; ++i) s.ribs.push_back({rng.uniform(30.0, spec.width - 30.0), rng.uniform(12.0, 22.0)});
  return s;
}

double pleura_row_at(const PhantomScene& scene, double x, int width) {
  const double u = (x - width / 2.0) / (width / 2.0);
  double irregular = 0.0;
  for (std::size_t k = 0; k < scene.irregularity_phase.size(); ++k)
    irregular += std::sin(x * 0.045 * static_cast<double>(k + 1) + scene.irregularity_phase[k]);
  return scene.pleura_row + scene.curvature * u * u + 2.0 * scene.severity * irregular;
}

namespace {

// Multiplicative speckle with a grain of a few pixels: unit-mean exponential noise blurred by a
// separable kernel, wider laterally than axially.
std::vector<double> speckle_field(int h, int w, Rng& rng) {
  constexpr std::array<double, 5> kLateral = {1 / 9.0, 2 / 9.0, 3 / 9.0, 2 / 9.0, 1 / 9.0};
  constexpr std::array<double, 3> kAxial = {0.25, 0.5, 0.25};
  const auto at = [w](int y, int x) { return static_cast<std::size_t>(y) * w + x; };
  std::vector<double> raw(static_cast<std::size_t>(h) * w);
  for (auto& e : raw) e = -std::log(1.0 - rng.uniform());
  std::vector<double> lateral(raw.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kLateral[k + 2] * raw[at(y, std::clamp(x + k, 0, w - 1))];
      lateral[at(y, x)] = acc;
    }
  std::vector<double> out(raw.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -1; k <= 1; ++k) acc += kAxial[k + 1] * lateral[at(std::clamp(y + k, 0, h - 1), x)];
      out[at(y, x)] = acc;
    }
  return out;
}

}  // namespace

GrayImage render_frame(const PhantomScene& scene, Rng& rng, const PhantomSpec& spec) {
  const int h = spec.height, w = spec.width;
  const double s = scene.severity;
  const bool healthy_grammar = s <= kHealthyGrammarMax;
  const double jitter_row = rng.uniform(-1.0, 1.0);
  std::vector<double> b_cols;
  for (double c : scene.b_line_columns) b_cols.push_back(c + rng.uniform(-1.5, 1.5));
  const double a_gain = 1.0 + rng.uniform(-0.1, 0.1);
  const double b_sigma = 2.5 + 6.0 * s;
  const double b_amp = 0.30 + 0.45 * s;
  const double b_fade = 300.0 + 300.0 * s;

  std::vector<double> pleura(static_cast<std::size_t>(w));
  std::vector<double> shadow(static_cast<std::size_t>(w), 1.0);
  std::vector<double> b_profile(static_cast<std::size_t>(w), 0.0);
  std::vector<double> fragment(static_cast<std::size_t>(w), 1.0);
  for (int x = 0; x < w; ++x) {
    pleura[x] = pleura_row_at(scene, x, w) + jitter_row;
    for (const auto& r : scene.ribs) {
      const double d = std::abs(x - r.center) - r.half_width;
      const double f = d >= 4.0 ? 1.0 : (d <= 0.0 ? 0.03 : 0.03 + 0.97 * d / 4.0);
      shadow[x] = std::min(shadow[x], f);
    }
    for (double c : b_cols) b_profile[x] += b_amp * gauss(x - c, b_sigma);
    fragment[x] = 1.0 - 0.35 * s * (0.5 + 0.5 * std::sin(x * 0.11 + scene.irregularity_phase[0] * 3.0));
  }

  const std::vector<double> grain = speckle_field(h, w, rng);
  GrayImage img(h, w);
  const double a_amp = healthy_grammar ? 0.30 * (1.0 - s / kHealthyGrammarMax) : 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double yp = pleura[x];
      const double depth = y - yp;
      double v;
      if (depth < -3.0) {
        v = 0.18 + 0.06 * std::sin(y / 7.0 + scene.irregularity_phase[1]);
      } else {
        v = 0.05;
        if (depth > 0.0) {
          v += 0.25 * s * std::exp(-depth / 250.0);
          if (b_profile[x] > 1e-6) v += b_profile[x] * std::exp(-depth / b_fade);
          if (a_amp > 0.0) {
            const double spacing = std::max(yp - 8.0, 20.0);
            double gain = a_gain;
            for (int k = 1; k <= scene.a_lines; ++k, gain *= 0.75)
              if (std::abs(depth - k * spacing) < 12.0) v += a_amp * gain * gauss(depth - k * spacing, 2.0);
          }
        }
      }
      if (std::abs(depth) < 14.0) v += 0.85 * fragment[x] * gauss(depth, 2.2);
      v *= (1.0 - spec.speckle) + spec.speckle * grain[static_cast<std::size_t>(y) * w + x];
      v *= shadow[x];
      img.at(y, x) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  return img;
}

FrameRecord generate_frame(double severity, Rng& rng, const PhantomSpec& spec) {
  const PhantomScene scene = make_scene(severity, rng, spec);
  return {"phantom#0", "phantom", 0, render_frame(scene, rng, spec)};
}

PhantomDataset generate_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "videos", ec);
  if (ec) throw IoError("cannot create '" + (out_dir / "videos").string() + "': " + ec.message());

  Rng root(derive_seed(spec.seed, 0xda7a));
  const int n_healthy = static_cast<int>(std::lround(spec.n_patients * spec.healthy_fraction));
  std::vector<int> order(static_cast<std::size_t>(spec.n_patients));
  for (int i = 0; i < spec.n_patients; ++i) order[i] = i;
  root.shuffle(std::span<int>(order));

  std::vector<PatientRecord> patients;
  std::vector<SessionRecord> sessions;
  std::vector<VideoRecord> videos;
  PhantomDataset ds;
  std::string sessions_csv = "session_id,severity,sf_value\n";
  std::uint64_t video_ordinal = 0;

  for (int i = 0; i < spec.n_patients; ++i) {
    const bool is_healthy = order[i] < n_healthy;
    Rng prng(derive_seed(spec.seed, 0x9a7, static_cast<std::uint64_t>(i)));
    PatientRecord p;
    p.patient_id = "P" + pad3(i);
    p.center = Center::Synthetic;
    p.gestational_age_weeks = prng.integer(25, 40);

    std::vector<double> severities;
    if (is_healthy) {
      p.disease = Disease::None;
      severities.push_back(prng.uniform(0.0, kHealthyGrammarMax));
    } else {
      const int m = std::clamp(prng.integer(spec.sessions_min, spec.sessions_max), 2, 3);
      const double peak = prng.uniform(0.2, 1.0);
      p.disease = peak > 0.55 ? Disease::RDS : Disease::TTN;
      severities.push_back(peak);
      if (m == 3) severities.push_back(std::max(0.2, peak * prng.uniform(0.4, 0.8)));
      severities.push_back(prng.uniform(0.0, kHealthyGrammarMax));
    }
    patients.push_back(p);

    for (std::size_t k = 0; k < severities.size(); ++k) {
      SessionRecord s;
      s.session_id = p.patient_id + "-S" + std::to_string(k + 1);
      s.patient_id = p.patient_id;
      s.session_index = static_cast<int>(k + 1);
      s.healed = !is_healthy && k + 1 == severities.size();
      s.sf_value = phantom_sf(severities[k], prng);
      ds.severity[s.session_id] = severities[k];
      sessions_csv += csv::join({s.session_id, csv::format_double(severities[k]), csv::format_double(s.sf_value)}) + "\n";
      sessions.push_back(s);

      for (int v = 0; v < spec.videos_per_session; ++v) {
        Rng vrng(derive_seed(spec.seed, 0x71de0, video_ordinal++));
        const PhantomScene scene = make_scene(severities[k], vrng, spec);
        std::vector<GrayImage> frames;
        frames.reserve(static_cast<std::size_t>(spec.frames_per_video));
        for (int f = 0; f < spec.frames_per_video; ++f) frames.push_back(render_frame(scene, vrng, spec));
        VideoRecord rec;
        rec.video_id = s.session_id + "-V" + std::to_string(v + 1);
        rec.session_id = s.session_id;
        rec.source_path = out_dir / "videos" / (rec.video_id + ".npyish");
        rec.frame_count = spec.frames_per_video;
        rec.fps = 30.0;
        rec.native_width = spec.width;
        rec.native_height = spec.height;
        write_raw_stack(rec.source_path, frames);
        videos.push_back(std::move(rec));
      }
    }
  }
  ds.manifest = Manifest(std::move(patients), std::move(sessions), std::move(videos));
  save_manifest(ds.manifest, out_dir / "manifest.csv");
  std::ofstream sc(out_dir / "sessions.csv", std::ios::binary);
  if (!sc) throw IoError("cannot write sessions.csv");
  sc << sessions_csv;
  return ds;
}

}  // namespace neolus
