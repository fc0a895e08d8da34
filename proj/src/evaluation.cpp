#include "neolus/evaluation.hpp"

#include "neolus/error.hpp"
#include "neolus/log.hpp"
#include "neolus/preprocess.hpp"

namespace neolus {

LoadedFrames load_frames(const Manifest& manifest, const std::set<std::string>& patients, ExtractionMode mode,
                         const DecoderRegistry& decoders, int rows) {
  LoadedFrames out;
  for (const auto& video : manifest.videos()) {
    const auto& session = manifest.session(video.session_id);
    if (!patients.contains(session.patient_id)) continue;
    const auto& patient = manifest.patient(session.patient_id);
    std::vector<FrameRecord> records;
    try {
      records = extract_frames(video, mode, decoders);
    } catch (const IngestionError& e) {
      log_warning(std::string("skipping video: ") + e.what());
      out.flagged_videos.push_back(video.video_id);
      continue;
    }
    const int label = static_cast<int>(derive_class_label(session, patient));
    for (const auto& rec : records) {
      out.frames.push_back({preprocess(rec, rows), patient.patient_id, session.session_id, video.video_id,
                            session.sf_value, label});
    }
  }
  return out;
}

PredictionSet predict_frames(Model& model, const std::vector<LabeledFrame>& frames, bool center_crop,
                             int batch_size) {
  const int width = model.backbone().input_width;
  std::vector<FrameTensor> cropped;
  std::vector<const FrameTensor*> ptrs;
  ptrs.reserve(frames.size());
  if (center_crop) {
    cropped.reserve(frames.size());
    for (const auto& f : frames) cropped.push_back(crop_columns(f.tensor, (f.tensor.width - width) / 2, width));
    for (const auto& t : cropped) ptrs.push_back(&t);
  } else {
    for (const auto& f : frames) ptrs.push_back(&f.tensor);
  }
  const auto scores = model.predict(ptrs, batch_size);
  PredictionSet p;
  p.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    PredictionEntry e{f.patient_id, f.session_id, f.video_id, f.tensor.frame_id, scores[i], f.sf, std::nullopt};
    if (model.head().task == Task::Classification) e.target_class = f.label;
    p.push_back(std::move(e));
  }
  return p;
}

EvaluationResult evaluate(Model& model, const CheckpointMeta& meta, const Manifest& manifest,
                          const std::set<std::string>& test_patients, const DecoderRegistry& decoders,
                          const std::vector<Level>& levels, SessionWeighting weighting) {
  if (test_patients.empty()) throw ConfigError("evaluate: test partition is empty");
  auto loaded = load_frames(manifest, test_patients, ExtractionMode::Test, decoders, model.backbone().input_height);
  if (loaded.frames.empty()) throw ConfigError("evaluate: no decodable test frames");
  EvaluationResult r;
  r.predictions = predict_frames(model, loaded.frames, meta.center_crop);
  r.report = compute_report(r.predictions, model.head().task, {meta.sf_clip, meta.sf_norm}, levels, weighting);
  r.flagged_videos = std::move(loaded.flagged_videos);
  return r;
}

}  // namespace neolus
