#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace neolus {

enum class Center { Naples, Milan, Florence, Synthetic };
enum class Disease { None, RDS, TTN };
enum class ClassLabel { Healthy = 0, Sick = 1 };

std::string_view to_string(Center c);
std::string_view to_string(Disease d);
Center parse_center(std::string_view s);    // throws ArgumentError
Disease parse_disease(std::string_view s);  // throws ArgumentError

struct PatientRecord {
  std::string patient_id;
  Center center = Center::Synthetic;
  Disease disease = Disease::None;
  std::optional<int> gestational_age_weeks;  // [25, 40] when known
};

struct SessionRecord {
  std::string session_id;
  std::string patient_id;
  double sf_value = 0.0;  // SpO2/FiO2, stored unclipped
  int session_index = 1;
  bool healed = false;
};

struct VideoRecord {
  std::string video_id;
  std::string session_id;
  std::filesystem::path source_path;
  int frame_count = 1;
  double fps = 30.0;
  int native_width = 1;
  int native_height = 1;
};

/// Per-disease / per-center patient counts and video counts.
struct ManifestSummary {
  std::map<Disease, int> patients;
  std::map<Disease, int> videos;
  std::map<Disease, std::map<Center, int>> patients_per_center;
  std::map<Center, int> center_totals;
  int total_patients = 0;
  int total_videos = 0;
};

/// The validated dataset hierarchy patient <- session <- video. Immutable after loading.
class Manifest {
 public:
  static constexpr int kSchemaVersion = 1;

  Manifest() = default;
  /// Validates every invariant; throws LoadError on violation.
  Manifest(std::vector<PatientRecord> patients, std::vector<SessionRecord> sessions,
           std::vector<VideoRecord> videos);

  const std::vector<PatientRecord>& patients() const { return patients_; }
  const std::vector<SessionRecord>& sessions() const { return sessions_; }
  const std::vector<VideoRecord>& videos() const { return videos_; }
  int schema_version() const { return kSchemaVersion; }

  const PatientRecord& patient(std::string_view id) const;
  const SessionRecord& session(std::string_view id) const;
  const PatientRecord& patient_of_session(std::string_view session_id) const;
  std::vector<const SessionRecord*> sessions_of(std::string_view patient_id) const;
  std::vector<const VideoRecord*> videos_of(std::string_view session_id) const;

  ManifestSummary summary() const;
  bool empty() const { return patients_.empty(); }

 private:
  std::vector<PatientRecord> patients_;
  std::vector<SessionRecord> sessions_;
  std::vector<VideoRecord> videos_;
  std::map<std::string, std::size_t, std::less<>> patient_index_;
  std::map<std::string, std::size_t, std::less<>> session_index_;
};

extern const char* const kManifestHeader;

/// Relative video paths are resolved against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir = {});
/// Canonical serialization: one row per video in manifest order, shortest round-trip numbers.
std::string serialize_manifest(const Manifest& m, const std::filesystem::path& base_dir = {});
void save_manifest(const Manifest& m, const std::filesystem::path& path);

ClassLabel derive_class_label(const SessionRecord& session, const PatientRecord& patient);

/// Printable table with the per-disease/per-center layout of the clinical dataset summary.
std::string render_summary(const ManifestSummary& s);

}  // namespace neolus
