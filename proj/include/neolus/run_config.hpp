#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neolus/metrics.hpp"
#include "neolus/model.hpp"
#include "neolus/preprocess.hpp"
#include "neolus/training.hpp"

namespace neolus {

struct PathsConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "run";
  std::filesystem::path split;        // existing split file; made from `split` params when empty
  std::filesystem::path weights_dir;  // `<dir>/<backbone>.trunk` pretrained trunks
};

struct SplitParams {
  std::string scheme = "kfold:5";
  std::uint64_t seed = 0;
};

struct EvaluationConfig {
  std::vector<Level> levels = {Level::Frame, Level::Video, Level::Session};
  SessionWeighting session_weighting = SessionWeighting::Frame;
};

/// Everything needed to reproduce a run. Serialized as nested JSON with the sections
/// paths, backbone, head, training, augmentation, split and evaluation; missing keys take
/// defaults and unknown keys are rejected. The head task always equals training.strategy.
struct RunConfig {
  PathsConfig paths;
  BackboneSpec backbone = BackboneSpec::standard(BackboneName::ResNet34);
  HeadSpec head;
  TrainingConfig training;
  AugmentationConfig augmentation;
  SplitParams split;
  EvaluationConfig evaluation;

  void validate() const;  // ConfigError
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);  // ConfigError
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// `section.key=value`; the value is read as JSON when it parses, else as a string.
void apply_override(RunConfig& cfg, const std::string& assignment);

inline constexpr const char* kSeedEnvVar = "NEOLUS_SEED";
/// NEOLUS_SEED, when set, replaces training.seed and augmentation.seed.
void apply_env_overrides(RunConfig& cfg);

}  // namespace neolus
