#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "neolus/ingestion.hpp"
#include "neolus/manifest.hpp"
#include "neolus/model.hpp"
#include "neolus/preprocess.hpp"
#include "neolus/split.hpp"
#include "neolus/task.hpp"

namespace neolus {

/// Easy sessions have sf >= easy_min_high or sf <= easy_max_low; the rest are hard.
struct CurriculumConfig {
  bool enabled = false;
  double easy_min_high = 400.0;
  double easy_max_low = 200.0;
  int phase1_epochs = 0;
};

/// Per-epoch learning-rate schedule: constant, or cosine decay from learning_rate towards zero.
enum class LrSchedule { Constant, Cosine };
std::string_view to_string(LrSchedule s);
LrSchedule parse_lr_schedule(std::string_view s);  // ConfigError

struct TrainingConfig {
  Task strategy = Task::Classification;
  double sf_clip = 450.0;
  double sf_norm = 450.0;
  CurriculumConfig curriculum;
  double learning_rate = 1e-4;
  LrSchedule lr_schedule = LrSchedule::Cosine;
  int batch_size = 32;
  int epochs = 50;
  double weight_decay = 1e-4;
  bool class_weighting = true;  // inverse video frequency per class
  int fold = 0;                 // test fold for k-fold plans
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError
};

/// Learning rate used during `epoch` (0-based).
double scheduled_learning_rate(const TrainingConfig& cfg, int epoch);

/// min(sf, clip) / norm. Throws ArgumentError for sf <= 0.
double clip_and_normalize_sf(double sf, double clip = 450.0, double norm = 450.0);

double regression_loss(double pred, double target);
/// Mean squared error over the batch.
double regression_loss(std::span<const double> pred, std::span<const double> target);

inline constexpr double kProbabilityEpsilon = 1e-7;
/// Logits and normalized SF predictions stay O(1) in healthy training. Batch norm and the clamped
/// cross-entropy can keep the loss finite long after the weights have blown up, so an output
/// beyond this magnitude also counts as divergence.
inline constexpr double kDivergenceOutputBound = 1e6;
/// Binary cross-entropy on the sick probability, clamped to [eps, 1 - eps].
double classification_loss(double prob_sick, int label);
double classification_loss(std::span<const double> prob_sick, std::span<const int> labels);

struct CurriculumPlan {
  std::set<std::string> easy;
  std::set<std::string> hard;
  int phase1_epochs = 0;

  bool in_phase1(int epoch) const { return epoch < phase1_epochs; }
};

/// Partitions the sessions. Throws ConfigError when there are no sessions or no easy session.
CurriculumPlan build_curriculum(std::span<const SessionRecord> sessions, const CurriculumConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_spearman_session;
  std::optional<double> val_mape_or_acc;
  int n_train_frames = 0;
};

std::string epoch_log_to_json(const EpochLog& e);
EpochLog epoch_log_from_json(const std::string& line);

struct TrainOptions {
  const DecoderRegistry* decoders = nullptr;  // defaults when null
  const WeightProvider* weights = nullptr;
  std::filesystem::path log_path;              // JSON-lines, written when non-empty
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainingResult {
  Model model;  // restored to the best validation epoch
  CheckpointMeta meta;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::set<std::string> test_patients;
};

/// Trains on the split's training patients and selects the epoch with the highest validation
/// session Spearman (the last epoch when no validation patient exists). Single-threaded and
/// bit-reproducible for a fixed seed. Throws ConfigError for an empty training partition or a
/// head whose task differs from the strategy, TrainingDiverged on a non-finite loss or an output
/// beyond kDivergenceOutputBound.
TrainingResult train(const Manifest& manifest, const SplitPlan& split, const TrainingConfig& cfg,
                     const BackboneSpec& backbone, const HeadSpec& head, const AugmentationConfig& aug,
                     const TrainOptions& opts = {});

}  // namespace neolus
