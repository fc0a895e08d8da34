#pragma once

#include <span>
#include <string>
#include <vector>

#include "neolus/manifest.hpp"
#include "neolus/metrics.hpp"

namespace neolus {

struct RunLabel {
  std::string network = "-";
  std::string input_size = "-";
  std::string augmentation = "none";
};

struct LabeledReport {
  RunLabel label;
  MetricsReport report;
};

/// Position of an augmentation label in the cumulative order none, hflip, hflip+rot,
/// hflip+rot+photo (other labels follow, alphabetically).
int augmentation_rank(const std::string& label);

/// Aligned table with one block per augmentation label and one row per run. Correlation and
/// MAPE/accuracy columns per level, best value per column suffixed with '*', numbers at six
/// significant digits, per-level counts in trailing columns. Throws ArgumentError on an empty
/// list or mixed tasks.
std::string render_table(std::span<const LabeledReport> reports);

/// Inverse of render_table (values restored to six significant digits). Throws LoadError.
std::vector<LabeledReport> parse_table(const std::string& text);

struct ScatterPoint {
  std::string id;
  std::string group;  // healthy, TTN, RDS, sick, unknown
  double x = 0.0;     // ground-truth SF
  double y = 0.0;     // predicted SF (regression) or healthy confidence (classification)
};

struct ScatterPlot {
  Task task = Task::Classification;
  Level level = Level::Session;
  std::vector<ScatterPoint> points;
};

/// Regression predictions are de-normalized and clipped to sf_clip for display, as are targets.
/// Groups come from the patient's disease when a manifest is given, else from target_class.
ScatterPlot scatter_data(const PredictionSet& frames, Task task, Level level, const ScoreScale& scale = {},
                         const Manifest* manifest = nullptr);
/// Static SVG: healthy = circle, TTN = triangle, RDS = square, others = diamond.
std::string render_svg(const ScatterPlot& plot);
/// Data sidecar: id,group,target_sf,value.
std::string scatter_csv(const ScatterPlot& plot);

}  // namespace neolus
