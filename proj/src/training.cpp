#include "neolus/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "neolus/error.hpp"
#include "neolus/evaluation.hpp"
#include "neolus/log.hpp"
#include "neolus/metrics.hpp"
#include "neolus/nn/optim.hpp"

namespace neolus {

void TrainingConfig::validate() const {
  if (!(sf_clip > 0.0)) throw ConfigError("training: sf_clip must be > 0");
  if (!(sf_norm > 0.0)) throw ConfigError("training: sf_norm must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("training: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (!(weight_decay >= 0.0)) throw ConfigError("training: weight_decay must be >= 0");
  if (fold < 0) throw ConfigError("training: fold must be >= 0");
  if (curriculum.enabled) {
    if (curriculum.phase1_epochs < 0 || curriculum.phase1_epochs >= epochs)
      throw ConfigError("training: curriculum phase-1 epochs must lie in [0, epochs)");
    if (!(curriculum.easy_max_low < curriculum.easy_min_high))
      throw ConfigError("training: curriculum thresholds must satisfy low < high");
  }
}

std::string_view to_string(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "cosine") return LrSchedule::Cosine;
  if (s == "constant") return LrSchedule::Constant;
  throw ConfigError("unknown lr_schedule '" + std::string(s) + "'");
}

double scheduled_learning_rate(const TrainingConfig& cfg, int epoch) {
  if (cfg.lr_schedule == LrSchedule::Constant) return cfg.learning_rate;
  constexpr double kPi = 3.14159265358979323846;
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(kPi * epoch / cfg.epochs));
}

double clip_and_normalize_sf(double sf, double clip, double norm) {
  if (!(sf > 0.0)) throw ArgumentError("sf must be > 0");
  if (!(clip > 0.0) || !(norm > 0.0)) throw ArgumentError("clip and norm must be > 0");
  return std::min(sf, clip) / norm;
}

double regression_loss(double pred, double target) {
  const double d = pred - target;
  return d * d;
}

double regression_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) throw ArgumentError("regression_loss: bad batch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += regression_loss(pred[i], target[i]);
  return s / static_cast<double>(pred.size());
}

double classification_loss(double prob_sick, int label) {
  const double p = std::clamp(prob_sick, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double classification_loss(std::span<const double> prob_sick, std::span<const int> labels) {
  if (prob_sick.size() != labels.size() || prob_sick.empty()) throw ArgumentError("classification_loss: bad batch");
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += classification_loss(prob_sick[i], labels[i]);
  return s / static_cast<double>(labels.size());
}

CurriculumPlan build_curriculum(std::span<const SessionRecord> sessions, const CurriculumConfig& cfg) {
  if (sessions.empty()) throw ConfigError("curriculum: no training sessions");
  CurriculumPlan plan;
  plan.phase1_epochs = cfg.phase1_epochs;
  for (const auto& s : sessions) {
    const bool easy = s.sf_value >= cfg.easy_min_high || s.sf_value <= cfg.easy_max_low;
    (easy ? plan.easy : plan.hard).insert(s.session_id);
  }
  if (plan.easy.empty())
    throw ConfigError("curriculum: easy set is empty; widen the easy thresholds");
  return plan;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::string epoch_log_to_json(const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_spearman_session"] = opt_json(e.val_spearman_session);
  j["val_mape_or_acc"] = opt_json(e.val_mape_or_acc);
  j["n_train_frames"] = e.n_train_frames;
  return j.dump();
}

EpochLog epoch_log_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EpochLog e;
    e.epoch = j.at("epoch").get<int>();
    e.train_loss = j.at("train_loss").get<double>();
    e.val_spearman_session = json_opt(j, "val_spearman_session");
    e.val_mape_or_acc = json_opt(j, "val_mape_or_acc");
    e.n_train_frames = j.value("n_train_frames", 0);
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(std::string("training log: ") + ex.what());
  }
}

TrainingResult train(const Manifest& manifest, const SplitPlan& split, const TrainingConfig& cfg,
                     const BackboneSpec& backbone_in, const HeadSpec& head, const AugmentationConfig& aug,
                     const TrainOptions& opts) {
  cfg.validate();
  aug.validate();
  if (head.task != cfg.strategy) throw ConfigError("training: head task differs from the training strategy");
  BackboneSpec backbone = backbone_in;
  backbone.input_width = aug.random_crop ? backbone.input_height : kInputWidth;
  backbone.validate();
  const int rows = backbone.input_height;
  const int crop = aug.random_crop ? rows : 0;

  if (split.is_kfold() && cfg.fold >= std::get<KFoldScheme>(split.scheme).k)
    throw ConfigError("training: fold index out of range");
  const PartitionSets parts = resolve_partitions(split, cfg.fold);
  if (parts.train.empty()) throw ConfigError("training: train partition is empty");

  const DecoderRegistry default_decoders = DecoderRegistry::with_defaults();
  const DecoderRegistry& decoders = opts.decoders ? *opts.decoders : default_decoders;

  auto train_set = load_frames(manifest, parts.train, ExtractionMode::Train, decoders, rows);
  if (train_set.frames.empty()) throw ConfigError("training: no decodable training frames");
  LoadedFrames val_set;
  if (!parts.val.empty()) val_set = load_frames(manifest, parts.val, ExtractionMode::Test, decoders, rows);
  else log_warning("training: no validation patients; the last epoch is kept");

  // Inverse video frequency per class, normalized so the mean weight over videos is 1.
  std::map<int, std::set<std::string>> videos_per_class;
  for (const auto& f : train_set.frames) videos_per_class[f.label].insert(f.video_id);
  std::map<int, double> class_weight;
  std::size_t n_videos = 0;
  for (const auto& [c, v] : videos_per_class) n_videos += v.size();
  for (const auto& [c, v] : videos_per_class)
    class_weight[c] = cfg.class_weighting ? static_cast<double>(n_videos) /
                                                (static_cast<double>(videos_per_class.size()) * v.size())
                                          : 1.0;

  std::vector<double> targets(train_set.frames.size());
  std::vector<double> weights(train_set.frames.size());
  for (std::size_t i = 0; i < train_set.frames.size(); ++i) {
    const auto& f = train_set.frames[i];
    targets[i] = cfg.strategy == Task::Regression ? clip_and_normalize_sf(f.sf, cfg.sf_clip, cfg.sf_norm)
                                                  : static_cast<double>(f.label);
    weights[i] = class_weight[f.label];
  }

  std::optional<CurriculumPlan> curriculum;
  if (cfg.curriculum.enabled) {
    std::vector<SessionRecord> sessions;
    for (const auto& s : manifest.sessions())
      if (parts.train.contains(s.patient_id)) sessions.push_back(s);
    curriculum = build_curriculum(sessions, cfg.curriculum);
  }
  std::vector<std::size_t> all_idx(train_set.frames.size());
  std::iota(all_idx.begin(), all_idx.end(), std::size_t{0});
  std::vector<std::size_t> easy_idx;
  if (curriculum)
    for (std::size_t i : all_idx)
      if (curriculum->easy.contains(train_set.frames[i].session_id)) easy_idx.push_back(i);

  Model model = build_model(backbone, head, cfg.seed, opts.weights);
  nn::Adam adam(model.parameters(), {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng order_rng(derive_seed(cfg.seed, 0x5eed));

  std::ofstream log_file;
  if (!opts.log_path.empty()) {
    log_file.open(opts.log_path, std::ios::binary | std::ios::trunc);
    if (!log_file) throw IoError("cannot write training log '" + opts.log_path.string() + "'");
  }

  CheckpointMeta meta{cfg.sf_clip, cfg.sf_norm, aug.random_crop};
  std::vector<EpochLog> log;
  std::vector<std::vector<float>> best_state;
  double best_score = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.set_learning_rate(scheduled_learning_rate(cfg, epoch));
    std::vector<std::size_t> order = (curriculum && curriculum->in_phase1(epoch)) ? easy_idx : all_idx;
    order_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t n = end - start;
      std::vector<FrameTensor> batch_frames;
      batch_frames.reserve(n);
      for (std::size_t k = start; k < end; ++k) {
        const auto& t = train_set.frames[order[k]].tensor;
        Rng frame_rng(derive_seed(aug.seed, static_cast<std::uint64_t>(epoch), order[k]));
        const auto sample = sample_augmentation(aug, frame_rng, t.width, crop);
        batch_frames.push_back(apply_augmentation(t, sample));
      }
      std::vector<const FrameTensor*> ptrs;
      for (const auto& t : batch_frames) ptrs.push_back(&t);

      adam.zero_grad();
      const nn::Tensor raw = model.forward_raw(model.make_batch(ptrs), true);
      nn::Tensor grad(raw.shape());
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[start + k];
        const double z = raw.data()[k];
        if (!(std::abs(z) <= kDivergenceOutputBound))
          throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ": model output " +
                                 std::to_string(z) + " beyond +-" + std::to_string(kDivergenceOutputBound) +
                                 "; lower the learning rate");
        double l, g;
        if (cfg.strategy == Task::Classification) {
          const double p = 1.0 / (1.0 + std::exp(-z));
          l = classification_loss(p, static_cast<int>(targets[i]));
          g = p - targets[i];
        } else {
          l = regression_loss(z, targets[i]);
          g = 2.0 * (z - targets[i]);
        }
        batch_loss += weights[i] * l;
        grad.data()[k] = static_cast<float>(weights[i] * g / static_cast<double>(n));
      }
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                               ": non-finite loss; lower the learning rate");
      loss_sum += batch_loss;
      model.backward(grad);
      adam.step();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.n_train_frames = static_cast<int>(order.size());
    if (!val_set.frames.empty()) {
      const auto preds = predict_frames(model, val_set.frames, aug.random_crop);
      const auto report = compute_report(preds, cfg.strategy, {cfg.sf_clip, cfg.sf_norm}, {Level::Session});
      const auto& s = report.levels.at(Level::Session);
      entry.val_spearman_session = s.spearman;
      entry.val_mape_or_acc = cfg.strategy == Task::Regression ? s.mape : s.accuracy;
      for (const auto& e : preds)
        if (!std::isfinite(e.score))
          throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ": non-finite predictions");
    }
    const double score = entry.val_spearman_session.value_or(-std::numeric_limits<double>::infinity());
    if (val_set.frames.empty() || best_epoch < 0 || score > best_score) {
      best_score = score;
      best_epoch = epoch;
      best_state = model.snapshot();
    }
    log.push_back(entry);
    if (log_file) {
      log_file << epoch_log_to_json(entry) << '\n';
      log_file.flush();
    }
    log_info("epoch " + std::to_string(epoch) + " loss " + std::to_string(entry.train_loss));
    if (opts.on_epoch) opts.on_epoch(entry);
  }

  model.restore(best_state);
  return TrainingResult{std::move(model), meta, std::move(log), best_epoch, parts.test};
}

}  // namespace neolus
