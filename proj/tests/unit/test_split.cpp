#include <doctest.h>

#include <set>

#include "neolus/error.hpp"
#include "neolus/split.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

Manifest synthetic_manifest(int n_healthy, int n_sick) {
  std::vector<PatientRecord> patients;
  std::vector<SessionRecord> sessions;
  std::vector<VideoRecord> videos;
  const Center centers[] = {Center::Naples, Center::Milan, Center::Florence};
  for (int i = 0; i < n_healthy + n_sick; ++i) {
    const bool sick = i >= n_healthy;
    PatientRecord p{"P" + std::to_string(i), centers[i % 3], sick ? (i % 2 ? Disease::RDS : Disease::TTN) : Disease::None,
                    30};
    patients.push_back(p);
    const int n_sessions = sick ? 2 : 1;
    for (int s = 0; s < n_sessions; ++s) {
      SessionRecord rec{p.patient_id + "-S" + std::to_string(s), p.patient_id, sick && s == 0 ? 200.0 : 440.0, s + 1,
                        sick && s == 1};
      sessions.push_back(rec);
      videos.push_back({rec.session_id + "-V", rec.session_id, "x.npyish", 10, 30, 64, 64});
    }
  }
  return Manifest(patients, sessions, videos);
}

}  // namespace

TEST_CASE("scheme parsing") {
  CHECK(std::get<KFoldScheme>(parse_scheme("kfold:5")).k == 5);
  const auto h = std::get<HoldoutScheme>(parse_scheme("holdout:0.7/0.15/0.15"));
  CHECK(h.train == doctest::Approx(0.7));
  CHECK(to_string(parse_scheme("kfold:3")) == "kfold:3");
  CHECK_THROWS_AS(parse_scheme("kfold:1"), ArgumentError);
  CHECK_THROWS_AS(parse_scheme("holdout:0.5/0.7/0.1"), ArgumentError);
  CHECK_THROWS_AS(parse_scheme("random"), ArgumentError);
}

TEST_CASE("k-fold assigns every patient to exactly one fold with balanced sizes") {
  const Manifest m = synthetic_manifest(43, 43);
  const SplitPlan plan = make_split(m, 11, KFoldScheme{5});
  CHECK(plan.folds.size() == 86);
  std::map<int, int> sizes;
  for (const auto& [p, f] : plan.folds) sizes[f]++;
  CHECK(sizes.size() == 5);
  for (const auto& [f, n] : sizes) {
    CHECK(n >= 17);
    CHECK(n <= 18);
  }
}

TEST_CASE("stratification keeps healthy and diseased in every fold") {
  const Manifest m = synthetic_manifest(20, 20);
  const SplitPlan plan = make_split(m, 3, KFoldScheme{5});
  std::map<int, std::set<Disease>> kinds;
  for (const auto& [p, f] : plan.folds) kinds[f].insert(m.patient(p).disease == Disease::None ? Disease::None : Disease::RDS);
  for (const auto& [f, k] : kinds) CHECK(k.size() == 2);
}

TEST_CASE("partitions are disjoint and cover all patients (property over seeds)") {
  const Manifest m = synthetic_manifest(13, 17);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const SplitScheme& scheme : {SplitScheme{KFoldScheme{5}}, SplitScheme{HoldoutScheme{0.6, 0.2, 0.2}}}) {
      const SplitPlan plan = make_split(m, seed, scheme);
      const int folds = plan.is_kfold() ? 5 : 1;
      for (int f = 0; f < folds; ++f) {
        const auto parts = resolve_partitions(plan, f);
        std::set<std::string> all;
        for (const auto* s : {&parts.train, &parts.val, &parts.test}) all.insert(s->begin(), s->end());
        CHECK(all.size() == parts.train.size() + parts.val.size() + parts.test.size());
        CHECK(all.size() == m.patients().size());
      }
    }
  }
}

TEST_CASE("split is deterministic in the seed and JSON round-trips") {
  const Manifest m = synthetic_manifest(10, 10);
  const SplitPlan a = make_split(m, 5, HoldoutScheme{});
  const SplitPlan b = make_split(m, 5, HoldoutScheme{});
  CHECK(a.holdout == b.holdout);
  const SplitPlan c = split_from_json(split_to_json(a));
  CHECK(c.holdout == a.holdout);
  CHECK(c.seed == 5);
  const SplitPlan k = make_split(m, 2, KFoldScheme{4});
  CHECK(split_from_json(split_to_json(k)).folds == k.folds);
}

TEST_CASE("two-part holdout has no validation partition") {
  const Manifest m = synthetic_manifest(10, 10);
  const auto parts = resolve_partitions(make_split(m, 1, parse_scheme("holdout:0.8/0.2")));
  CHECK(parts.val.empty());
  CHECK(parts.train.size() + parts.test.size() == 20);
}
