#include <doctest.h>

#include <fstream>

#include "neolus/error.hpp"
#include "neolus/manifest.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

std::string header() { return std::string(kManifestHeader) + "\n"; }

const char* kTwoPatients =
    "P1,Naples,None,30,P1-S1,1,false,450,P1-S1-V1,v1.mp4,40,30,640,480\n"
    "P2,Milan,RDS,,P2-S1,1,false,180.5,P2-S1-V1,v2.mp4,55,30,640,480\n"
    "P2,Milan,RDS,,P2-S2,2,true,440,P2-S2-V1,v3.mp4,60,30,640,480\n"
    "P2,Milan,RDS,,P2-S2,2,true,440,P2-S2-V2,v4.mp4,61,30,640,480\n";

}  // namespace

TEST_CASE("parse builds the hierarchy and resolves relative paths") {
  const Manifest m = parse_manifest(header() + kTwoPatients, "/data");
  CHECK(m.patients().size() == 2);
  CHECK(m.sessions().size() == 3);
  CHECK(m.videos().size() == 4);
  CHECK(m.videos()[0].source_path == std::filesystem::path("/data/v1.mp4"));
  CHECK_FALSE(m.patient("P2").gestational_age_weeks.has_value());
  CHECK(m.videos_of("P2-S2").size() == 2);
  CHECK(m.sessions_of("P2").size() == 2);
  CHECK(m.patient_of_session("P2-S2").disease == Disease::RDS);
}

TEST_CASE("class labels: None and healed sessions are healthy") {
  const Manifest m = parse_manifest(header() + kTwoPatients);
  CHECK(derive_class_label(m.session("P1-S1"), m.patient("P1")) == ClassLabel::Healthy);
  CHECK(derive_class_label(m.session("P2-S1"), m.patient("P2")) == ClassLabel::Sick);
  CHECK(derive_class_label(m.session("P2-S2"), m.patient("P2")) == ClassLabel::Healthy);
}

TEST_CASE("serialize then parse is the identity") {
  const Manifest m = parse_manifest(header() + kTwoPatients, "/data");
  const std::string text = serialize_manifest(m, "/data");
  const Manifest again = parse_manifest(text, "/data");
  CHECK(serialize_manifest(again, "/data") == text);
  CHECK(again.session("P2-S1").sf_value == 180.5);
}

TEST_CASE("validation errors carry row and field") {
  SUBCASE("sf out of range") {
    const std::string bad = header() + "P1,Naples,None,30,P1-S1,1,false,0,V1,v1.mp4,4,30,64,48\n";
    CHECK_THROWS_AS(parse_manifest(bad), LoadError);
  }
  SUBCASE("gestational age out of range") {
    const std::string bad = header() + "P1,Naples,None,24,P1-S1,1,false,400,V1,v1.mp4,4,30,64,48\n";
    CHECK_THROWS_AS(parse_manifest(bad), LoadError);
  }
  SUBCASE("diseased patient with one session") {
    const std::string bad = header() + "P1,Naples,TTN,30,P1-S1,1,false,300,V1,v1.mp4,4,30,64,48\n";
    CHECK_THROWS_AS(parse_manifest(bad), LoadError);
  }
  SUBCASE("healthy patient with two sessions") {
    const std::string bad = header() + "P1,Naples,None,30,P1-S1,1,false,450,V1,v1.mp4,4,30,64,48\n" +
                            "P1,Naples,None,30,P1-S2,2,false,450,V2,v2.mp4,4,30,64,48\n";
    CHECK_THROWS_AS(parse_manifest(bad), LoadError);
  }
  SUBCASE("non-numeric field reports its name") {
    const std::string bad = header() + "P1,Naples,None,30,P1-S1,1,false,abc,V1,v1.mp4,4,30,64,48\n";
    try {
      parse_manifest(bad);
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(e.row() == 1);
      CHECK(e.field() == "sf_value");
    }
  }
  SUBCASE("duplicate video id") {
    const std::string bad = header() + "P1,Naples,None,30,P1-S1,1,false,450,V1,v1.mp4,4,30,64,48\n" +
                            "P1,Naples,None,30,P1-S1,1,false,450,V1,v2.mp4,4,30,64,48\n";
    CHECK_THROWS_AS(parse_manifest(bad), LoadError);
  }
  SUBCASE("header mismatch") { CHECK_THROWS_AS(parse_manifest("a,b,c\n"), LoadError); }
}

TEST_CASE("round-trip through files of a generated phantom") {
  testing::TempDir dir;
  const auto ds = generate_dataset(testing::small_phantom(), dir.path());
  const Manifest loaded = load_manifest(dir / "manifest.csv");
  save_manifest(loaded, dir / "copy.csv");
  std::ifstream a(dir / "manifest.csv"), b(dir / "copy.csv");
  const std::string ta((std::istreambuf_iterator<char>(a)), {}), tb((std::istreambuf_iterator<char>(b)), {});
  CHECK(ta == tb);
  CHECK(loaded.videos().size() == ds.manifest.videos().size());
}

TEST_CASE("summary counts patients and videos per disease") {
  const Manifest m = parse_manifest(header() + kTwoPatients);
  const auto s = m.summary();
  CHECK(s.total_patients == 2);
  CHECK(s.total_videos == 4);
  CHECK(s.patients.at(Disease::RDS) == 1);
  CHECK(s.videos.at(Disease::RDS) == 3);
  CHECK(s.patients_per_center.at(Disease::None).at(Center::Naples) == 1);
  const std::string table = render_summary(s);
  CHECK(table.find("RDS") != std::string::npos);
}
