#include "neolus/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "neolus/csv.hpp"
#include "neolus/error.hpp"

namespace neolus {

const char* const kPredictionHeader = "patient_id,session_id,video_id,frame_id,score,target_sf,target_class";

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Frame: return "frame";
    case Level::Video: return "video";
    case Level::Session: return "session";
  }
  return "?";
}

Level parse_level(std::string_view s) {
  if (s == "frame") return Level::Frame;
  if (s == "video") return Level::Video;
  if (s == "session") return Level::Session;
  throw ConfigError("unknown level '" + std::string(s) + "'");
}

namespace {

struct Group {
  PredictionEntry head;
  double sum = 0.0;
  long count = 0;
};

PredictionSet group_mean(const PredictionSet& p, bool by_video) {
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& e : p) {
    const std::string key = e.patient_id + '\x1f' + e.session_id + (by_video ? '\x1f' + e.video_id : std::string());
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      Group g;
      g.head = e;
      g.head.frame_id.clear();
      if (!by_video) g.head.video_id.clear();
      groups.push_back(std::move(g));
    }
    Group& g = groups[it->second];
    g.sum += e.score;
    ++g.count;
  }
  PredictionSet out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    g.head.score = g.sum / static_cast<double>(g.count);
    out.push_back(std::move(g.head));
  }
  return out;
}

std::optional<double> try_spearman(std::span<const double> x, std::span<const double> y) {
  try {
    return spearman(x, y);
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  } catch (const ArgumentError&) {
    return std::nullopt;
  }
}

}  // namespace

PredictionSet aggregate(const PredictionSet& p, Level level, SessionWeighting weighting) {
  switch (level) {
    case Level::Frame: return p;
    case Level::Video: return group_mean(p, true);
    case Level::Session:
      return weighting == SessionWeighting::Frame ? group_mean(p, false) : group_mean(group_mean(p, true), false);
  }
  return p;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: length mismatch");
  if (x.size() < 2) throw ArgumentError("spearman: need at least two samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("spearman: constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mape(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ArgumentError("mape: length mismatch");
  if (pred.empty()) throw ArgumentError("mape: empty input");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(target[i] > 0.0)) throw ArgumentError("mape: targets must be strictly positive");
    s += std::abs(pred[i] - target[i]) / target[i];
  }
  return s / static_cast<double>(pred.size());
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw ArgumentError("accuracy: length mismatch");
  if (scores.empty()) throw ArgumentError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) correct += ((scores[i] >= threshold) ? 1 : 0) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double sf_aligned_score(double score, Task task) { return task == Task::Classification ? 1.0 - score : score; }

MetricsReport compute_report(const PredictionSet& frames, Task task, const ScoreScale& scale,
                             const std::vector<Level>& levels, SessionWeighting weighting) {
  if (frames.empty()) throw ArgumentError("cannot evaluate an empty prediction set");
  MetricsReport r;
  r.task = task;
  for (Level level : levels) {
    const PredictionSet p = aggregate(frames, level, weighting);
    LevelMetrics m;
    m.count = static_cast<int>(p.size());
    std::vector<double> aligned, sf;
    for (const auto& e : p) {
      aligned.push_back(sf_aligned_score(e.score, task));
      sf.push_back(e.target_sf);
    }
    m.spearman = try_spearman(aligned, sf);
    if (task == Task::Regression) {
      std::vector<double> pred_sf, target_sf;
      for (const auto& e : p) {
        pred_sf.push_back(std::clamp(e.score, 0.0, 1.0) * scale.sf_norm);
        target_sf.push_back(std::min(e.target_sf, scale.sf_clip));
      }
      m.mape = mape(pred_sf, target_sf);
    } else {
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& e : p) {
        if (!e.target_class) throw ArgumentError("classification report needs target_class on every entry");
        scores.push_back(e.score);
        labels.push_back(*e.target_class);
      }
      m.accuracy = accuracy(scores, labels);
    }
    r.levels[level] = m;
  }
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["task"] = to_string(r.task);
  auto& levels = j["levels"] = nlohmann::ordered_json::object();
  for (const auto& [level, m] : r.levels) {
    nlohmann::ordered_json e;
    e["count"] = m.count;
    e["spearman"] = m.spearman ? nlohmann::ordered_json(*m.spearman) : nlohmann::ordered_json(nullptr);
    if (r.task == Task::Regression) {
      e["mape"] = m.mape ? nlohmann::ordered_json(*m.mape) : nlohmann::ordered_json(nullptr);
    } else {
      e["accuracy"] = m.accuracy ? nlohmann::ordered_json(*m.accuracy) : nlohmann::ordered_json(nullptr);
    }
    levels[std::string(to_string(level))] = e;
  }
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.task = parse_task(j.at("task").get<std::string>());
    for (const auto& [name, e] : j.at("levels").items()) {
      LevelMetrics m;
      m.count = e.at("count").get<int>();
      auto opt = [&](const char* key) -> std::optional<double> {
        if (!e.contains(key) || e.at(key).is_null()) return std::nullopt;
        return e.at(key).get<double>();
      };
      m.spearman = opt("spearman");
      m.mape = opt("mape");
      m.accuracy = opt("accuracy");
      r.levels[parse_level(name)] = m;
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("metrics report schema violation: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  }
  return r;
}

std::string predictions_to_csv(const PredictionSet& p) {
  std::string out = kPredictionHeader;
  out.push_back('\n');
  for (const auto& e : p) {
    out += csv::join({e.patient_id, e.session_id, e.video_id, e.frame_id, csv::format_double(e.score),
                      csv::format_double(e.target_sf), e.target_class ? std::to_string(*e.target_class) : ""});
    out.push_back('\n');
  }
  return out;
}

PredictionSet predictions_from_csv(const std::string& text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || csv::join(rows.front()) != kPredictionHeader)
    throw LoadError("prediction CSV header mismatch; expected: " + std::string(kPredictionHeader));
  PredictionSet p;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const int row = static_cast<int>(r);
    if (f.size() != 7) throw LoadError("row " + std::to_string(row) + ": expected 7 fields", row);
    PredictionEntry e{f[0], f[1], f[2], f[3], 0.0, 0.0, std::nullopt};
    auto num = [&](const std::string& s, const char* field) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw LoadError("row " + std::to_string(row) + ", field " + field + ": expected number", row, field);
      return v;
    };
    e.score = num(f[4], "score");
    e.target_sf = num(f[5], "target_sf");
    if (!f[6].empty()) {
      if (f[6] != "0" && f[6] != "1")
        throw LoadError("row " + std::to_string(row) + ", field target_class: expected 0 or 1", row, "target_class");
      e.target_class = f[6] == "1" ? 1 : 0;
    }
    p.push_back(std::move(e));
  }
  return p;
}

void save_predictions(const PredictionSet& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write predictions '" + path + "'");
  out << predictions_to_csv(p);
}

PredictionSet load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open predictions '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return predictions_from_csv(ss.str());
}

Task infer_task(const PredictionSet& p) {
  for (const auto& e : p)
    if (e.target_class) return Task::Classification;
  return Task::Regression;
}

}  // namespace neolus
