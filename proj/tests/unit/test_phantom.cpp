#include <doctest.h>

#include <fstream>
#include <iterator>

#include "neolus/error.hpp"
#include "neolus/ingestion.hpp"
#include "neolus/metrics.hpp"
#include "neolus/phantom.hpp"
#include "neolus/preprocess.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

double below_pleura_mean(double s, std::uint64_t seed) {
  Rng rng(seed);
  const PhantomScene scene = make_scene(s, rng);
  const GrayImage img = render_frame(scene, rng);
  double sum = 0;
  long n = 0;
  for (int x = 0; x < img.width; ++x) {
    const int start = static_cast<int>(std::ceil(pleura_row_at(scene, x, img.width))) + 8;
    for (int y = std::max(start, 0); y < img.height; ++y, ++n) sum += img.at(y, x);
  }
  return sum / n / 255.0;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("healthy frames are dark below the pleura, sick frames bright") {
  double healthy = 0, sick = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double h = below_pleura_mean(0.0, seed);
    CHECK(h < 0.15);
    healthy += h;
    sick += below_pleura_mean(1.0, seed);
  }
  CHECK(sick > 2.0 * healthy);
}

TEST_CASE("below-pleura brightness increases with severity") {
  double previous = -1;
  for (double s : {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    double m = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) m += below_pleura_mean(s, 1000 + seed);
    CHECK(m > previous);
    previous = m;
  }
}

TEST_CASE("frames are deterministic and native sized") {
  Rng a(17), b(17);
  const auto fa = generate_frame(0.4, a);
  const auto fb = generate_frame(0.4, b);
  CHECK(fa.pixels.pixels == fb.pixels.pixels);
  CHECK(fa.pixels.height == 512);
  CHECK(fa.pixels.width == 461);
  CHECK_THROWS_AS(generate_frame(1.5, a), ArgumentError);
}

TEST_CASE("scene grammar") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double s = rng.uniform();
    const auto scene = make_scene(s, rng);
    CHECK(scene.pleura_row >= 50);
    CHECK(scene.pleura_row <= 70);
    CHECK(scene.ribs.size() <= 3);
    if (s > kHealthyGrammarMax) CHECK(scene.b_line_columns.size() == static_cast<std::size_t>(std::ceil(8 * s)));
    else CHECK(scene.b_line_columns.empty());
    CHECK(scene.a_lines >= 1);
    CHECK(scene.a_lines <= 3);
  }
}

TEST_CASE("SF law") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform();
    const double sf = phantom_sf(s, rng);
    CHECK(sf >= 90);
    CHECK(sf <= 460);
    CHECK(std::abs(sf - std::clamp(450 - 280 * s, 90.0, 460.0)) <= 10.0 + 1e-9);
  }
}

TEST_CASE("dataset generation") {
  testing::TempDir a, b;
  PhantomSpec spec;
  spec.n_patients = 40;
  spec.frames_per_video = 2;
  spec.height = 128;
  spec.width = 115;
  spec.seed = 3;
  const auto da = generate_dataset(spec, a.path());
  const auto db = generate_dataset(spec, b.path());

  const Manifest loaded = load_manifest(a / "manifest.csv");
  CHECK(loaded.patients().size() == 40);
  CHECK(loaded.videos().size() == da.manifest.videos().size());
  CHECK(slurp(a / "manifest.csv").size() > 0);
  for (const auto& v : da.manifest.videos()) {
    const auto rel = std::filesystem::relative(v.source_path, a.path());
    CHECK(slurp(v.source_path) == slurp(b.path() / rel));
  }
  CHECK(slurp(a / "sessions.csv") == slurp(b / "sessions.csv"));

  std::vector<double> sev, sf;
  for (const auto& s : loaded.sessions()) {
    const double severity = da.severity.at(s.session_id);
    sev.push_back(severity);
    sf.push_back(s.sf_value);
    const auto& p = loaded.patient(s.patient_id);
    if (p.disease == Disease::None) CHECK(severity <= kHealthyGrammarMax);
    else if (!s.healed) CHECK((p.disease == Disease::RDS) == (da.severity.at(loaded.sessions_of(p.patient_id).front()->session_id) > 0.55));
    if (s.healed) CHECK(severity <= kHealthyGrammarMax);
  }
  CHECK(spearman(sev, sf) <= -0.95);
  for (const auto& p : loaded.patients()) {
    const auto n = loaded.sessions_of(p.patient_id).size();
    if (p.disease == Disease::None) CHECK(n == 1);
    else CHECK((n == 2 || n == 3));
  }
}

TEST_CASE("generated frames preprocess without padding at every network height") {
  testing::WarningCapture cap;
  Rng rng(4);
  const auto f = generate_frame(0.5, rng);
  for (int rows : {224, 240, 260}) CHECK(preprocess(f, rows).height == rows);
  CHECK(cap.warnings.empty());
}

TEST_CASE("spec JSON round-trip and validation") {
  PhantomSpec s;
  s.n_patients = 12;
  s.sessions_min = 2;
  s.sessions_max = 3;
  s.speckle = 0.3;
  s.seed = 99;
  const auto back = phantom_spec_from_json(phantom_spec_to_json(s));
  CHECK(phantom_spec_to_json(back) == phantom_spec_to_json(s));
  CHECK_THROWS_AS(phantom_spec_from_json("{\"n_patients\": 0}"), ArgumentError);
  CHECK_THROWS_AS(phantom_spec_from_json("{"), LoadError);
}

TEST_CASE("unwritable output path") {
  testing::TempDir d;
  { std::ofstream(d / "file") << "x"; }
  CHECK_THROWS_AS(generate_dataset(testing::small_phantom(), d / "file" / "sub"), IoError);
}
