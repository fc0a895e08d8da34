// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "neolus/error.hpp"
#include "neolus/evaluation.hpp"
#include "neolus/metrics.hpp"
#include "neolus/phantom.hpp"
#include "neolus/pooling.hpp"
#include "neolus/preprocess.hpp"
#include "neolus/report.hpp"
#include "neolus/split.hpp"
#include "neolus/training.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = "failed: " + what;
      pass = false;
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool run_criterion(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_seconds) o.require(false, "runtime " + fmt(secs, 1) + " s over " + fmt(limit_seconds, 0) + " s");
  std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  [" << fmt(secs, 2) << " s]  "
            << o.detail << std::endl;
  return o.pass;
}

// 1. Metric oracles.
Outcome metric_oracles() {
  Outcome o;
  Rng rng(101);
  double worst_rho = 0, worst_mape = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(11));
    const bool ties = trial % 2 == 1;
    std::vector<double> x(n), y(n), t(n);
    for (int i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng.integer(0, 3)) : rng.uniform(-5, 5);
      y[i] = ties ? static_cast<double>(rng.integer(0, 3)) : rng.uniform(-5, 5);
      t[i] = rng.uniform(90, 460);
    }
    const auto rx = testing::oracle_ranks(x), ry = testing::oracle_ranks(y);
    const bool degenerate = std::all_of(rx.begin(), rx.end(), [&](double r) { return r == rx[0]; }) ||
                            std::all_of(ry.begin(), ry.end(), [&](double r) { return r == ry[0]; });
    if (!degenerate) worst_rho = std::max(worst_rho, std::abs(spearman(x, y) - testing::oracle_spearman(x, y)));
    worst_mape = std::max(worst_mape, std::abs(mape(x, t) - testing::oracle_mape(x, t)));
  }
  o.require(worst_rho <= 1e-12, "spearman deviation " + std::to_string(worst_rho));
  o.require(worst_mape <= 1e-12, "mape deviation " + std::to_string(worst_mape));
  if (o.pass) o.detail = "max |spearman - oracle| = " + fmt(worst_rho, 16) + ", max |mape - oracle| = " + fmt(worst_mape, 16);
  return o;
}

// 2. Pooling correctness.
Outcome pooling() {
  Outcome o;
  const FeatureMap constant(3, 4, 5, 0.7);
  for (double v : position_preserving_pool(constant)) o.require(v == 0.7, "constancy");

  FeatureMap hand(1, 2, 3);
  hand.values = {1, 3, 5, 3, 5, 7};
  o.require(position_preserving_pool(hand) == std::vector<double>{2, 4, 6}, "hand-computed [2,4,6]");

  double worst_grad = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    FeatureMap f(3, 4, 6);
    for (auto& v : f.values) v = rng.uniform(-2, 2);
    const auto pooled = position_preserving_pool(f);
    const auto flipped = position_preserving_pool(hflip_columns(f));
    for (int c = 0; c < 3; ++c)
      for (int w = 0; w < 6; ++w) o.require(flipped[c * 6 + w] == pooled[c * 6 + 5 - w], "hflip equivariance");

    FeatureMap d(2, 4, 8);
    for (auto& v : d.values) v = static_cast<double>(rng.integer(-64, 64)) / 8.0;
    const auto pp = position_preserving_pool(d);
    const auto ga = global_average_pool(d);
    for (int c = 0; c < 2; ++c) {
      double sum = 0;
      for (int w = 0; w < 8; ++w) sum += pp[c * 8 + w];
      o.require(sum / 8 == ga[c], "mean consistency with the global pool");
    }

    FeatureMap g(2, 3, 4);
    for (auto& v : g.values) v = rng.uniform(-2, 2);
    std::vector<double> weights(8);
    for (auto& v : weights) v = rng.uniform(-1, 1);
    const FeatureMap analytic = position_preserving_pool_backward(g, weights);
    const auto loss = [&](const FeatureMap& m) {
      const auto p = position_preserving_pool(m);
      return std::inner_product(p.begin(), p.end(), weights.begin(), 0.0);
    };
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double keep = g.values[i];
      g.values[i] = keep + 1e-6;
      const double lp = loss(g);
      g.values[i] = keep - 1e-6;
      const double lm = loss(g);
      g.values[i] = keep;
      const double num = (lp - lm) / 2e-6;
      worst_grad = std::max(worst_grad, std::abs(num - analytic.values[i]) / std::max(std::abs(num), 1e-12));
    }
  }
  o.require(worst_grad <= 1e-4, "gradient relative error " + std::to_string(worst_grad));
  if (o.pass) o.detail = "max gradient relative error = " + fmt(worst_grad, 10);
  return o;
}

// 3. Augmentation invariants.
Outcome augmentation() {
  Outcome o;
  Rng frames(55);
  for (int i = 0; i < 8; ++i) {
    const FrameTensor t = preprocess(generate_frame(frames.uniform(), frames), 224);
    const auto valid = [&](const FrameTensor& u) {
      return u.height == t.height && u.width == t.width &&
             std::all_of(u.pixels.begin(), u.pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
    };
    o.require(valid(hflip(t)) && valid(rotate(t, 7.5)) && valid(photometric(t, 1.25, 0.75)), "range and shape");
    o.require(hflip(hflip(t)).pixels == t.pixels, "hflip involution");
    o.require(rotate(t, 0.0).pixels == t.pixels, "rotate by zero");
    o.require(photometric(t, 1.0, 1.0).pixels == t.pixels, "unit photometric");
    AugmentationConfig cfg;
    Rng a(900 + i), b(900 + i);
    const FrameTensor x = augment(t, cfg, a), y = augment(t, cfg, b);
    o.require(x.pixels == y.pixels && valid(x), "determinism under a fixed rng state");
  }

  AugmentationConfig cfg;
  Rng rng(2024);
  int flips = 0;
  std::vector<double> angles;
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_augmentation(cfg, rng);
    flips += s.flip;
    angles.push_back(s.angle);
  }
  const double rate = flips / 10000.0;
  const double ks = testing::ks_uniform(angles, -kMaxRotationDegrees, kMaxRotationDegrees);
  const double ks_critical = 1.628 / std::sqrt(10000.0);  // alpha = 0.01
  o.require(std::abs(rate - 0.5) <= 0.02, "flip rate " + fmt(rate));
  o.require(ks < ks_critical, "rotation KS statistic " + fmt(ks));
  if (o.pass) o.detail = "flip rate = " + fmt(rate) + ", KS D = " + fmt(ks) + " < " + fmt(ks_critical);
  return o;
}

// 4. Leakage guard.
Outcome leakage() {
  Outcome o;
  testing::TempDir dir;
  PhantomSpec spec;
  spec.n_patients = 40;
  spec.frames_per_video = 1;
  spec.height = 64;
  spec.width = 64;
  spec.seed = 404;
  const Manifest m = generate_dataset(spec, dir.path()).manifest;
  std::set<std::string> all;
  for (const auto& p : m.patients()) all.insert(p.patient_id);

  int plans = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (const SplitScheme& scheme : {SplitScheme{KFoldScheme{5}}, SplitScheme{HoldoutScheme{0.7, 0.15, 0.15}}}) {
      const SplitPlan plan = make_split(m, seed, scheme);
      ++plans;
      o.require(plan.patient_count() == all.size(), "every patient assigned once");
      const int folds = plan.is_kfold() ? 5 : 1;
      for (int f = 0; f < folds; ++f) {
        const PartitionSets s = resolve_partitions(plan, f);
        std::set<std::string> seen;
        std::size_t total = 0;
        for (const auto* part : {&s.train, &s.val, &s.test}) {
          seen.insert(part->begin(), part->end());
          total += part->size();
        }
        o.require(total == seen.size(), "patient in two partitions");
        o.require(seen == all, "partitions do not cover the cohort");
      }
    }
  }
  if (o.pass) o.detail = std::to_string(plans) + " plans over " + std::to_string(all.size()) + " patients, no crossing";
  return o;
}

// Shared phantom for the end-to-end criteria.
struct EndToEnd {
  testing::TempDir dir;
  PhantomDataset data;
  SplitPlan split;
  std::optional<EvaluationResult> ga_classification;

  EndToEnd() {
    PhantomSpec spec;  // 40 patients, 1-2 sessions, 2 videos, 12 frames
    spec.seed = 1;
    data = generate_dataset(spec, dir.path());
    split = make_split(data.manifest, 1, HoldoutScheme{0.6, 0.15, 0.25});
  }

  EvaluationResult run(Task task, PoolingKind pooling) {
    TrainingConfig cfg;
    cfg.strategy = task;
    cfg.epochs = 10;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    AugmentationConfig aug;  // flip, rotation and photometric all enabled
    aug.seed = 1;
    const auto backbone = BackboneSpec::standard(BackboneName::TinyNet, false);
    TrainingResult r = train(data.manifest, split, cfg, backbone, {pooling, task}, aug);
    return evaluate(r.model, r.meta, data.manifest, r.test_patients, DecoderRegistry::with_defaults());
  }

  std::string describe() const {
    return std::to_string(data.manifest.patients().size()) + " patients, " +
           std::to_string(data.manifest.videos().size()) + " videos";
  }
};

const LevelMetrics& session_metrics(const EvaluationResult& r) { return r.report.levels.at(Level::Session); }

// 5. Classification end to end.
Outcome classification(EndToEnd& e2e) {
  Outcome o;
  e2e.ga_classification = e2e.run(Task::Classification, PoolingKind::GlobalAverage);
  const auto& s = session_metrics(*e2e.ga_classification);
  const double rho = s.spearman.value_or(-1), acc = s.accuracy.value_or(0);
  o.require(rho >= 0.80, "session Spearman " + fmt(rho));
  o.require(acc >= 0.90, "session accuracy " + fmt(acc));
  o.detail += (o.pass ? "" : "; ") + e2e.describe() + ", " + std::to_string(s.count) + " test sessions, Spearman = " +
              fmt(rho) + ", accuracy = " + fmt(acc);
  return o;
}

// 6. Regression end to end.
Outcome regression(EndToEnd& e2e) {
  Outcome o;
  const auto r = e2e.run(Task::Regression, PoolingKind::GlobalAverage);
  const auto& s = session_metrics(r);
  const double rho = s.spearman.value_or(-1), err = s.mape.value_or(1e9);
  o.require(rho >= 0.80, "session Spearman " + fmt(rho));
  o.require(err <= 0.15, "session MAPE " + fmt(err));
  o.detail += (o.pass ? "" : "; ") + e2e.describe() + ", " + std::to_string(s.count) + " test sessions, Spearman = " +
              fmt(rho) + ", MAPE = " + fmt(err);
  return o;
}

// 7. Global average against position-preserving pooling.
Outcome pooling_comparison(EndToEnd& e2e) {
  Outcome o;
  if (!e2e.ga_classification) e2e.ga_classification = e2e.run(Task::Classification, PoolingKind::GlobalAverage);
  const auto pp = e2e.run(Task::Classification, PoolingKind::PositionPreserving);
  const std::vector<LabeledReport> runs = {{{"tinynet", "224", "hflip+rot+photo"}, e2e.ga_classification->report},
                                           {{"tinynet+pp", "224", "hflip+rot+photo"}, pp.report}};
  const std::string table = render_table(runs);
  o.require(parse_table(table).size() == 2, "report does not parse back");
  std::cout << table;
  const auto g = session_metrics(*e2e.ga_classification).spearman, p = session_metrics(pp).spearman;
  if (g && p)
    o.detail = "session Spearman global = " + fmt(*g) + ", position-preserving = " + fmt(*p) + ", delta = " +
               fmt(*p - *g) + (*p >= *g ? " (expected sign)" : " (opposite sign)");
  else
    o.detail = "session Spearman undefined for one head";
  return o;
}

// 8. Frame policy.
Outcome frame_policy(EndToEnd& e2e) {
  Outcome o;
  testing::TempDir dir;
  std::vector<Manifest> manifests = {e2e.data.manifest};
  for (int frames : {1, 2, 3, 6, 7, 10, 11, 25}) {
    PhantomSpec spec;
    spec.n_patients = 2;
    spec.frames_per_video = frames;
    spec.height = 64;
    spec.width = 64;
    spec.seed = static_cast<std::uint64_t>(frames);
    manifests.push_back(generate_dataset(spec, dir / std::to_string(frames)).manifest);
  }
  const auto decoders = DecoderRegistry::with_defaults();
  int videos = 0;
  for (const auto& m : manifests)
    for (const auto& v : m.videos()) {
      ++videos;
      for (const auto [mode, cap] : {std::pair{ExtractionMode::Train, kTrainFramesPerVideo},
                                     std::pair{ExtractionMode::Test, kTestFramesPerVideo}}) {
        const auto frames = extract_frames(v, mode, decoders);
        const auto n = static_cast<std::size_t>(v.frame_count);
        o.require(frames.size() <= static_cast<std::size_t>(cap), v.video_id + " over the frame cap");
        o.require(frames.size() == std::min<std::size_t>(n, cap), v.video_id + " frame count");
        if (n >= 2) {
          o.require(frames.front().frame_index == 0, v.video_id + " first frame missing");
          o.require(frames.back().frame_index == v.frame_count - 1, v.video_id + " last frame missing");
        }
      }
    }
  if (o.pass) o.detail = std::to_string(videos) + " videos checked in train and test mode";
  return o;
}

// 9. Curriculum identity at phase-1 length zero.
Outcome curriculum_identity() {
  Outcome o;
  testing::TempDir dir;
  const auto data = generate_dataset(testing::small_phantom(10, 3, 21), dir.path());
  const auto split = make_split(data.manifest, 4, HoldoutScheme{0.6, 0.2, 0.2});
  TrainingConfig plain;
  plain.strategy = Task::Classification;
  plain.epochs = 3;
  plain.batch_size = 8;
  plain.learning_rate = 1e-3;
  plain.seed = 5;
  TrainingConfig curriculum = plain;
  curriculum.curriculum.enabled = true;
  curriculum.curriculum.phase1_epochs = 0;
  AugmentationConfig aug;
  aug.seed = 9;
  const auto backbone = BackboneSpec::standard(BackboneName::TinyNet, false);
  const HeadSpec head{PoolingKind::PositionPreserving, Task::Classification};
  const auto a = train(data.manifest, split, plain, backbone, head, aug);
  const auto b = train(data.manifest, split, curriculum, backbone, head, aug);
  o.require(a.log.size() == b.log.size(), "log lengths differ");
  for (std::size_t i = 0; i < std::min(a.log.size(), b.log.size()); ++i)
    o.require(epoch_log_to_json(a.log[i]) == epoch_log_to_json(b.log[i]), "epoch " + std::to_string(i) + " differs");
  if (o.pass) o.detail = std::to_string(a.log.size()) + " identical epoch logs";
  return o;
}

// 10. Round-trips.
Outcome round_trips(EndToEnd& e2e) {
  Outcome o;
  testing::TempDir dir;
  const Manifest& m = e2e.data.manifest;
  save_manifest(m, dir / "manifest.csv");
  const Manifest back = load_manifest(dir / "manifest.csv");
  o.require(serialize_manifest(back, dir.path()) == serialize_manifest(m, dir.path()), "manifest save/load");
  o.require(back.videos().size() == m.videos().size() && back.sessions().size() == m.sessions().size(),
            "manifest record counts");

  if (e2e.ga_classification) {
    const PredictionSet& p = e2e.ga_classification->predictions;
    save_predictions(p, (dir / "predictions.csv").string());
    const PredictionSet q = load_predictions((dir / "predictions.csv").string());
    o.require(predictions_to_csv(q) == predictions_to_csv(p), "prediction CSV");
    o.require(q.size() == p.size(), "prediction count");

    const MetricsReport& r = e2e.ga_classification->report;
    o.require(report_to_json(report_from_json(report_to_json(r))) == report_to_json(r), "report JSON");
    const std::vector<LabeledReport> runs = {{{"tinynet", "224", "hflip+rot+photo"}, r}};
    const std::string table = render_table(runs);
    o.require(render_table(parse_table(table)) == table, "report table");
  } else {
    o.require(false, "no predictions from the classification run");
  }
  if (o.pass) o.detail = "manifest, predictions CSV, report JSON and table are identities";
  return o;
}

}  // namespace

int main() {
  set_log_sink([](LogLevel l, const std::string& msg) {
    if (l >= LogLevel::Warning) std::cerr << "warning: " << msg << "\n";
  });
  EndToEnd e2e;
  bool ok = true;
  ok &= run_criterion(1, "metric oracles", 10, metric_oracles);
  ok &= run_criterion(2, "pooling correctness", 5, pooling);
  ok &= run_criterion(3, "augmentation invariants", 60, augmentation);
  ok &= run_criterion(4, "leakage guard", 10, leakage);
  ok &= run_criterion(5, "phantom end-to-end classification", 1800, [&] { return classification(e2e); });
  ok &= run_criterion(6, "phantom end-to-end regression", 1800, [&] { return regression(e2e); });
  ok &= run_criterion(7, "positional pooling comparison", 3600, [&] { return pooling_comparison(e2e); });
  ok &= run_criterion(8, "frame policy", 5, [&] { return frame_policy(e2e); });
  ok &= run_criterion(9, "curriculum identity", 300, curriculum_identity);
  ok &= run_criterion(10, "round-trips", 10, [&] { return round_trips(e2e); });
  std::cout << (ok ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
  return ok ? 0 : 1;
}
