#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neolus/task.hpp"

namespace neolus {

/// One scored frame (or, after aggregation, one video or session). `score` is the model output:
/// sick-class probability for classification, normalized SF for regression.
struct PredictionEntry {
  std::string patient_id;
  std::string session_id;
  std::string video_id;
  std::string frame_id;
  double score = 0.0;
  double target_sf = 0.0;
  std::optional<int> target_class;
};

using PredictionSet = std::vector<PredictionEntry>;

enum class Level { Frame, Video, Session };
std::string_view to_string(Level l);
Level parse_level(std::string_view s);

/// Session scores: mean over every frame of the session, or mean of the per-video means.
enum class SessionWeighting { Frame, Video };

/// Groups by video or session in order of first appearance and averages scores. Targets pass
/// through. Aggregating an already aggregated set to the same level is the identity.
PredictionSet aggregate(const PredictionSet& p, Level level, SessionWeighting weighting = SessionWeighting::Frame);

/// Tie-aware (average) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation of average ranks. Throws ArgumentError on length mismatch or n < 2 and
/// UndefinedCorrelation when either vector is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// (1/N) sum |x - y| / y. Throws ArgumentError on a target <= 0 or length mismatch.
double mape(std::span<const double> pred, std::span<const double> target);

/// Fraction of entries with (score >= threshold) == label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct LevelMetrics {
  int count = 0;
  std::optional<double> spearman;  // absent when undefined (constant scores)
  std::optional<double> mape;      // regression
  std::optional<double> accuracy;  // classification
};

struct MetricsReport {
  Task task = Task::Classification;
  std::map<Level, LevelMetrics> levels;
};

struct ScoreScale {
  double sf_clip = 450.0;
  double sf_norm = 450.0;
};

/// Regression: Spearman(score, SF) and MAPE of clamp(score, 0, 1) * sf_norm against
/// min(SF, sf_clip). Classification: Spearman(1 - score, SF), i.e. healthy confidence, and
/// accuracy of the sick probability against target_class.
MetricsReport compute_report(const PredictionSet& frames, Task task, const ScoreScale& scale = {},
                             const std::vector<Level>& levels = {Level::Frame, Level::Video, Level::Session},
                             SessionWeighting weighting = SessionWeighting::Frame);

/// Score whose rank is correlated with SF at a given task.
double sf_aligned_score(double score, Task task);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);

extern const char* const kPredictionHeader;
std::string predictions_to_csv(const PredictionSet& p);
PredictionSet predictions_from_csv(const std::string& text);
void save_predictions(const PredictionSet& p, const std::string& path);
PredictionSet load_predictions(const std::string& path);
/// Classification when any entry carries a target class.
Task infer_task(const PredictionSet& p);

}  // namespace neolus
