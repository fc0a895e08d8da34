#include "neolus/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "neolus/csv.hpp"
#include "neolus/error.hpp"

namespace neolus {

const char* const kManifestHeader =
    "patient_id,center,disease,gestational_age_weeks,session_id,session_index,healed,sf_value,"
    "video_id,video_path,frame_count,fps,width,height";

namespace {

constexpr std::size_t kColumns = 14;

enum Col {
  kPatientId,
  kCenter,
  kDisease,
  kGestationalAge,
  kSessionId,
  kSessionIndex,
  kHealed,
  kSfValue,
  kVideoId,
  kVideoPath,
  kFrameCount,
  kFps,
  kWidth,
  kHeight
};

const char* const kColumnNames[kColumns] = {
    "patient_id", "center",   "disease",  "gestational_age_weeks", "session_id",
    "session_index", "healed", "sf_value", "video_id", "video_path",
    "frame_count", "fps",     "width",    "height"};

int parse_int(const std::string& s, int row, int col) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw LoadError("row " + std::to_string(row) + ", field " + kColumnNames[col] +
                        ": expected integer, got '" + s + "'",
                    row, kColumnNames[col]);
  return v;
}

double parse_real(const std::string& s, int row, int col) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
    throw LoadError("row " + std::to_string(row) + ", field " + kColumnNames[col] +
                        ": expected number, got '" + s + "'",
                    row, kColumnNames[col]);
  return v;
}

bool parse_bool(const std::string& s, int row, int col) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw LoadError("row " + std::to_string(row) + ", field " + kColumnNames[col] +
                      ": expected true/false, got '" + s + "'",
                  row, kColumnNames[col]);
}

[[noreturn]] void fail(int row, int col, const std::string& what) {
  throw LoadError("row " + std::to_string(row) + ", field " + kColumnNames[col] + ": " + what, row,
                  kColumnNames[col]);
}

}  // namespace

std::string_view to_string(Center c) {
  switch (c) {
    case Center::Naples: return "Naples";
    case Center::Milan: return "Milan";
    case Center::Florence: return "Florence";
    case Center::Synthetic: return "Synthetic";
  }
  return "?";
}

std::string_view to_string(Disease d) {
  switch (d) {
    case Disease::None: return "None";
    case Disease::RDS: return "RDS";
    case Disease::TTN: return "TTN";
  }
  return "?";
}

Center parse_center(std::string_view s) {
  for (Center c : {Center::Naples, Center::Milan, Center::Florence, Center::Synthetic})
    if (to_string(c) == s) return c;
  throw ArgumentError("unknown center '" + std::string(s) + "'");
}

Disease parse_disease(std::string_view s) {
  for (Disease d : {Disease::None, Disease::RDS, Disease::TTN})
    if (to_string(d) == s) return d;
  throw ArgumentError("unknown disease '" + std::string(s) + "'");
}

Manifest::Manifest(std::vector<PatientRecord> patients, std::vector<SessionRecord> sessions,
                   std::vector<VideoRecord> videos)
    : patients_(std::move(patients)), sessions_(std::move(sessions)), videos_(std::move(videos)) {
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    const auto& p = patients_[i];
    if (p.patient_id.empty()) throw LoadError("empty patient_id", 0, "patient_id");
    if (!patient_index_.emplace(p.patient_id, i).second)
      throw LoadError("duplicate patient_id '" + p.patient_id + "'", 0, "patient_id");
    if (p.gestational_age_weeks && (*p.gestational_age_weeks < 25 || *p.gestational_age_weeks > 40))
      throw LoadError("patient '" + p.patient_id + "': gestational age outside [25, 40]", 0,
                      "gestational_age_weeks");
  }
  std::map<std::string, int, std::less<>> session_counts;
  for (std::size_t i = 0; i < sessions_.size(); ++i) {
    const auto& s = sessions_[i];
    if (s.session_id.empty()) throw LoadError("empty session_id", 0, "session_id");
    if (!session_index_.emplace(s.session_id, i).second)
      throw LoadError("duplicate session_id '" + s.session_id + "'", 0, "session_id");
    if (!patient_index_.contains(s.patient_id))
      throw LoadError("session '" + s.session_id + "' references unknown patient '" + s.patient_id + "'",
                      0, "patient_id");
    if (!(s.sf_value > 0.0) || s.sf_value > 500.0)
      throw LoadError("session '" + s.session_id + "': sf_value must be in (0, 500]", 0, "sf_value");
    ++session_counts[s.patient_id];
  }
  std::set<std::string, std::less<>> video_ids;
  std::set<std::string, std::less<>> sessions_with_video;
  for (const auto& v : videos_) {
    if (v.video_id.empty()) throw LoadError("empty video_id", 0, "video_id");
    if (!video_ids.insert(v.video_id).second)
      throw LoadError("duplicate video_id '" + v.video_id + "'", 0, "video_id");
    if (!session_index_.contains(v.session_id))
      throw LoadError("video '" + v.video_id + "' references unknown session '" + v.session_id + "'",
                      0, "session_id");
    if (v.frame_count < 1) throw LoadError("video '" + v.video_id + "': frame_count < 1", 0, "frame_count");
    if (!(v.fps > 0)) throw LoadError("video '" + v.video_id + "': fps must be positive", 0, "fps");
    if (v.native_width < 1 || v.native_height < 1)
      throw LoadError("video '" + v.video_id + "': non-positive native size", 0, "width");
    sessions_with_video.insert(v.session_id);
  }
  for (const auto& p : patients_) {
    const int n = session_counts[p.patient_id];
    if (p.disease == Disease::None && n != 1)
      throw LoadError("patient '" + p.patient_id + "' has disease None but " + std::to_string(n) +
                          " sessions (expected 1)",
                      0, "disease");
    if (p.disease != Disease::None && (n < 2 || n > 3))
      throw LoadError("patient '" + p.patient_id + "' is diseased but has " + std::to_string(n) +
                          " sessions (expected 2 or 3)",
                      0, "disease");
  }
}

const PatientRecord& Manifest::patient(std::string_view id) const {
  auto it = patient_index_.find(id);
  if (it == patient_index_.end()) throw ArgumentError("unknown patient '" + std::string(id) + "'");
  return patients_[it->second];
}

const SessionRecord& Manifest::session(std::string_view id) const {
  auto it = session_index_.find(id);
  if (it == session_index_.end()) throw ArgumentError("unknown session '" + std::string(id) + "'");
  return sessions_[it->second];
}

const PatientRecord& Manifest::patient_of_session(std::string_view session_id) const {
  return patient(session(session_id).patient_id);
}

std::vector<const SessionRecord*> Manifest::sessions_of(std::string_view patient_id) const {
  std::vector<const SessionRecord*> out;
  for (const auto& s : sessions_)
    if (s.patient_id == patient_id) out.push_back(&s);
  return out;
}

std::vector<const VideoRecord*> Manifest::videos_of(std::string_view session_id) const {
  std::vector<const VideoRecord*> out;
  for (const auto& v : videos_)
    if (v.session_id == session_id) out.push_back(&v);
  return out;
}

ManifestSummary Manifest::summary() const {
  ManifestSummary s;
  for (const auto& p : patients_) {
    ++s.patients[p.disease];
    ++s.patients_per_center[p.disease][p.center];
    ++s.center_totals[p.center];
    ++s.total_patients;
  }
  for (const auto& v : videos_) {
    ++s.videos[patient_of_session(v.session_id).disease];
    ++s.total_videos;
  }
  return s;
}

Manifest parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw LoadError("manifest is empty (missing header)");
  if (csv::join(rows.front()) != kManifestHeader)
    throw LoadError("manifest header mismatch; expected: " + std::string(kManifestHeader));

  std::vector<PatientRecord> patients;
  std::vector<SessionRecord> sessions;
  std::vector<VideoRecord> videos;
  std::map<std::string, std::pair<std::size_t, int>, std::less<>> patient_rows;  // index, first row
  std::map<std::string, std::pair<std::size_t, int>, std::less<>> session_rows;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int row = static_cast<int>(r);
    const auto& f = rows[r];
    if (f.size() != kColumns)
      throw LoadError("row " + std::to_string(row) + ": expected " + std::to_string(kColumns) +
                          " fields, got " + std::to_string(f.size()),
                      row);

    PatientRecord p;
    p.patient_id = f[kPatientId];
    if (p.patient_id.empty()) fail(row, kPatientId, "empty");
    try {
      p.center = parse_center(f[kCenter]);
    } catch (const ArgumentError& e) {
      fail(row, kCenter, e.what());
    }
    try {
      p.disease = parse_disease(f[kDisease]);
    } catch (const ArgumentError& e) {
      fail(row, kDisease, e.what());
    }
    if (!f[kGestationalAge].empty()) {
      p.gestational_age_weeks = parse_int(f[kGestationalAge], row, kGestationalAge);
      if (*p.gestational_age_weeks < 25 || *p.gestational_age_weeks > 40)
        fail(row, kGestationalAge, "outside [25, 40]");
    }

    SessionRecord s;
    s.session_id = f[kSessionId];
    if (s.session_id.empty()) fail(row, kSessionId, "empty");
    s.patient_id = p.patient_id;
    s.session_index = parse_int(f[kSessionIndex], row, kSessionIndex);
    s.healed = parse_bool(f[kHealed], row, kHealed);
    s.sf_value = parse_real(f[kSfValue], row, kSfValue);
    if (!(s.sf_value > 0.0)) fail(row, kSfValue, "sf_value must be > 0");
    if (s.sf_value > 500.0) fail(row, kSfValue, "sf_value must be <= 500");

    VideoRecord v;
    v.video_id = f[kVideoId];
    if (v.video_id.empty()) fail(row, kVideoId, "empty");
    v.session_id = s.session_id;
    if (f[kVideoPath].empty()) fail(row, kVideoPath, "empty");
    std::filesystem::path vp(f[kVideoPath]);
    v.source_path = (vp.is_relative() && !base_dir.empty()) ? base_dir / vp : vp;
    v.frame_count = parse_int(f[kFrameCount], row, kFrameCount);
    if (v.frame_count < 1) fail(row, kFrameCount, "must be >= 1");
    v.fps = parse_real(f[kFps], row, kFps);
    if (!(v.fps > 0)) fail(row, kFps, "must be > 0");
    v.native_width = parse_int(f[kWidth], row, kWidth);
    v.native_height = parse_int(f[kHeight], row, kHeight);
    if (v.native_width < 1) fail(row, kWidth, "must be >= 1");
    if (v.native_height < 1) fail(row, kHeight, "must be >= 1");

    if (auto it = patient_rows.find(p.patient_id); it != patient_rows.end()) {
      const auto& prev = patients[it->second.first];
      if (prev.center != p.center || prev.disease != p.disease ||
          prev.gestational_age_weeks != p.gestational_age_weeks)
        fail(row, kPatientId, "patient fields disagree with row " + std::to_string(it->second.second));
    } else {
      patient_rows.emplace(p.patient_id, std::pair{patients.size(), row});
      patients.push_back(p);
    }
    if (auto it = session_rows.find(s.session_id); it != session_rows.end()) {
      const auto& prev = sessions[it->second.first];
      if (prev.patient_id != s.patient_id)
        fail(row, kSessionId, "session already belongs to patient '" + prev.patient_id + "'");
      if (prev.sf_value != s.sf_value || prev.session_index != s.session_index || prev.healed != s.healed)
        fail(row, kSessionId, "session fields disagree with row " + std::to_string(it->second.second));
    } else {
      session_rows.emplace(s.session_id, std::pair{sessions.size(), row});
      sessions.push_back(s);
    }
    videos.push_back(std::move(v));
  }
  return Manifest(std::move(patients), std::move(sessions), std::move(videos));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open manifest '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string serialize_manifest(const Manifest& m, const std::filesystem::path& base_dir) {
  std::string out = kManifestHeader;
  out.push_back('\n');
  for (const auto& v : m.videos()) {
    const auto& s = m.session(v.session_id);
    const auto& p = m.patient(s.patient_id);
    std::filesystem::path vp = v.source_path;
    if (!base_dir.empty()) {
      auto rel = vp.lexically_relative(base_dir);
      if (!rel.empty() && *rel.begin() != "..") vp = rel;
    }
    out += csv::join({p.patient_id, std::string(to_string(p.center)), std::string(to_string(p.disease)),
                      p.gestational_age_weeks ? std::to_string(*p.gestational_age_weeks) : "",
                      s.session_id, std::to_string(s.session_index), s.healed ? "true" : "false",
                      csv::format_double(s.sf_value), v.video_id, vp.generic_string(),
                      std::to_string(v.frame_count), csv::format_double(v.fps),
                      std::to_string(v.native_width), std::to_string(v.native_height)});
    out.push_back('\n');
  }
  return out;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << serialize_manifest(m, path.parent_path());
}

ClassLabel derive_class_label(const SessionRecord& session, const PatientRecord& patient) {
  if (patient.disease == Disease::None) return ClassLabel::Healthy;
  return session.healed ? ClassLabel::Healthy : ClassLabel::Sick;
}

std::string render_summary(const ManifestSummary& s) {
  const Center centers[] = {Center::Naples, Center::Milan, Center::Florence, Center::Synthetic};
  std::vector<Center> shown;
  for (Center c : centers)
    if (s.center_totals.contains(c)) shown.push_back(c);
  std::ostringstream os;
  os << std::left << std::setw(8) << "Disease" << std::right << std::setw(9) << "patients" << std::setw(8)
     << "videos";
  for (Center c : shown) os << std::setw(11) << to_string(c);
  os << '\n';
  for (Disease d : {Disease::None, Disease::RDS, Disease::TTN}) {
    auto pit = s.patients.find(d);
    if (pit == s.patients.end()) continue;
    os << std::left << std::setw(8) << to_string(d) << std::right << std::setw(9) << pit->second
       << std::setw(8) << (s.videos.contains(d) ? s.videos.at(d) : 0);
    for (Center c : shown) {
      int n = 0;
      if (auto it = s.patients_per_center.find(d); it != s.patients_per_center.end() && it->second.contains(c))
        n = it->second.at(c);
      os << std::setw(11) << (n ? std::to_string(n) : "-");
    }
    os << '\n';
  }
  os << std::left << std::setw(8) << "Tot." << std::right << std::setw(9) << s.total_patients << std::setw(8)
     << s.total_videos;
  for (Center c : shown) os << std::setw(11) << s.center_totals.at(c);
  os << '\n';
  return os.str();
}

}  // namespace neolus
