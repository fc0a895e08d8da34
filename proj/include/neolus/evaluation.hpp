#pragma once

#include <set>
#include <string>
#include <vector>

#include "neolus/image.hpp"
#include "neolus/ingestion.hpp"
#include "neolus/manifest.hpp"
#include "neolus/metrics.hpp"
#include "neolus/model.hpp"

namespace neolus {

/// Preprocessed frame with the hierarchy keys and targets of its session.
struct LabeledFrame {
  FrameTensor tensor;
  std::string patient_id;
  std::string session_id;
  std::string video_id;
  double sf = 0.0;
  int label = 0;
};

struct LoadedFrames {
  std::vector<LabeledFrame> frames;
  std::vector<std::string> flagged_videos;  // undecodable media, skipped
};

/// Extracts and preprocesses (R rows, width 461) the policy frames of every video belonging to
/// `patients`, in manifest order. Undecodable videos are flagged and skipped.
LoadedFrames load_frames(const Manifest& manifest, const std::set<std::string>& patients, ExtractionMode mode,
                         const DecoderRegistry& decoders, int rows);

/// Frame-level predictions; with `center_crop` each frame is cut to its centred model-width window.
PredictionSet predict_frames(Model& model, const std::vector<LabeledFrame>& frames, bool center_crop,
                             int batch_size = 16);

struct EvaluationResult {
  PredictionSet predictions;  // frame level
  MetricsReport report;
  std::vector<std::string> flagged_videos;
};

/// Test-mode extraction (at most 6 frames per video), no augmentation, inference, metrics.
/// Throws ConfigError on an empty test set.
EvaluationResult evaluate(Model& model, const CheckpointMeta& meta, const Manifest& manifest,
                          const std::set<std::string>& test_patients, const DecoderRegistry& decoders,
                          const std::vector<Level>& levels = {Level::Frame, Level::Video, Level::Session},
                          SessionWeighting weighting = SessionWeighting::Frame);

}  // namespace neolus
