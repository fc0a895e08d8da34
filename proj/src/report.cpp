#include "neolus/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "neolus/csv.hpp"
#include "neolus/error.hpp"

namespace neolus {

namespace {

constexpr std::array<const char*, 4> kAugmentationOrder = {"none", "hflip", "hflip+rot", "hflip+rot+photo"};
constexpr std::array<Level, 3> kLevels = {Level::Frame, Level::Video, Level::Session};

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string sanitize(std::string s) {
  if (s.empty()) return "-";
  for (char& c : s)
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  return s;
}

enum class Metric { Correlation, Second, Count };

struct Column {
  std::string name;
  Metric metric;
  Level level;
};

std::optional<double> cell_value(const MetricsReport& r, const Column& c) {
  auto it = r.levels.find(c.level);
  if (it == r.levels.end()) return std::nullopt;
  switch (c.metric) {
    case Metric::Correlation: return it->second.spearman;
    case Metric::Second: return r.task == Task::Regression ? it->second.mape : it->second.accuracy;
    case Metric::Count: return static_cast<double>(it->second.count);
  }
  return std::nullopt;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

}  // namespace

int augmentation_rank(const std::string& label) {
  for (std::size_t i = 0; i < kAugmentationOrder.size(); ++i)
    if (label == kAugmentationOrder[i]) return static_cast<int>(i);
  return static_cast<int>(kAugmentationOrder.size());
}

std::string render_table(std::span<const LabeledReport> reports) {
  if (reports.empty()) throw ArgumentError("render_table: no reports");
  const Task task = reports.front().report.task;
  for (const auto& r : reports)
    if (r.report.task != task) throw ArgumentError("render_table: mixed regression and classification reports");

  std::vector<Level> levels;
  for (Level l : kLevels)
    if (std::any_of(reports.begin(), reports.end(), [&](const auto& r) { return r.report.levels.contains(l); }))
      levels.push_back(l);
  const std::string second = task == Task::Regression ? "mape_" : "acc_";
  std::vector<Column> cols;
  for (Level l : levels) cols.push_back({"corr_" + std::string(to_string(l)), Metric::Correlation, l});
  for (Level l : levels) cols.push_back({second + std::string(to_string(l)), Metric::Second, l});
  for (Level l : levels) cols.push_back({"n_" + std::string(to_string(l)), Metric::Count, l});

  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& la = reports[a].label.augmentation;
    const auto& lb = reports[b].label.augmentation;
    const int ra = augmentation_rank(la), rb = augmentation_rank(lb);
    if (ra != rb) return ra < rb;
    return ra == static_cast<int>(kAugmentationOrder.size()) && la < lb;
  });

  std::vector<std::optional<double>> best(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].metric == Metric::Count) continue;
    const bool lower_better = cols[c].metric == Metric::Second && task == Task::Regression;
    for (const auto& r : reports) {
      const auto v = cell_value(r.report, cols[c]);
      if (!v) continue;
      if (!best[c] || (lower_better ? *v < *best[c] : *v > *best[c])) best[c] = v;
    }
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"network", "input", "augmentation"});
  for (const auto& c : cols) rows.back().push_back(c.name);
  std::vector<std::string> block_of_row{""};
  for (std::size_t i : order) {
    const auto& r = reports[i];
    std::vector<std::string> row{sanitize(r.label.network), sanitize(r.label.input_size),
                                 sanitize(r.label.augmentation)};
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto v = cell_value(r.report, cols[c]);
      std::string cell = v ? fmt6(*v) : "-";
      if (v && best[c] && *v == *best[c]) cell += '*';
      row.push_back(cell);
    }
    rows.push_back(std::move(row));
    block_of_row.push_back(sanitize(r.label.augmentation));
  }

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::string out = "task: " + std::string(to_string(task)) + "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0 && (r == 1 || block_of_row[r] != block_of_row[r - 1])) {
      if (r > 1) out += "\n";
      out += "== augmentation: " + block_of_row[r] + " ==\n";
    }
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      line += rows[r][c];
      if (c + 1 < rows[r].size()) line += std::string(width[c] - rows[r][c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

std::vector<LabeledReport> parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<Task> task;
  std::vector<std::string> header;
  std::vector<LabeledReport> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto toks = split_ws(line);
    if (toks.empty() || toks.front() == "==") continue;
    if (!task) {
      if (toks.size() != 2 || toks[0] != "task:") throw LoadError("report table: missing task line", lineno);
      task = parse_task(toks[1]);
      continue;
    }
    if (header.empty()) {
      if (toks.size() < 3 || toks[0] != "network") throw LoadError("report table: missing column header", lineno);
      header = toks;
      continue;
    }
    if (toks.size() != header.size()) throw LoadError("report table: column count mismatch", lineno);
    LabeledReport lr;
    lr.label = {toks[0], toks[1], toks[2]};
    lr.report.task = *task;
    for (std::size_t c = 3; c < toks.size(); ++c) {
      const auto& name = header[c];
      const auto us = name.find('_');
      if (us == std::string::npos) throw LoadError("report table: bad column '" + name + "'", lineno);
      const std::string metric = name.substr(0, us);
      const Level level = parse_level(name.substr(us + 1));
      std::string cell = toks[c];
      if (!cell.empty() && cell.back() == '*') cell.pop_back();
      if (cell == "-") continue;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw LoadError("report table: bad number '" + toks[c] + "'", lineno, name);
      auto& lm = lr.report.levels[level];
      if (metric == "corr") lm.spearman = v;
      else if (metric == "mape") lm.mape = v;
      else if (metric == "acc") lm.accuracy = v;
      else if (metric == "n") lm.count = static_cast<int>(std::lround(v));
      else throw LoadError("report table: bad column '" + name + "'", lineno);
    }
    out.push_back(std::move(lr));
  }
  if (out.empty()) throw LoadError("report table: no rows");
  return out;
}

ScatterPlot scatter_data(const PredictionSet& frames, Task task, Level level, const ScoreScale& scale,
                         const Manifest* manifest) {
  ScatterPlot plot;
  plot.task = task;
  plot.level = level;
  const PredictionSet p = level == Level::Frame ? frames : aggregate(frames, level);
  for (const auto& e : p) {
    ScatterPoint pt;
    pt.id = level == Level::Frame ? e.frame_id : level == Level::Video ? e.video_id : e.session_id;
    pt.x = std::min(e.target_sf, scale.sf_clip);
    pt.y = task == Task::Regression ? std::min(std::clamp(e.score, 0.0, 1.0) * scale.sf_norm, scale.sf_clip)
                                    : sf_aligned_score(e.score, task);
    if (manifest) {
      const auto& patient = manifest->patient(e.patient_id);
      pt.group = patient.disease == Disease::None ? "healthy" : std::string(to_string(patient.disease));
    } else if (e.target_class) {
      pt.group = *e.target_class == 0 ? "healthy" : "sick";
    } else {
      pt.group = "unknown";
    }
    plot.points.push_back(std::move(pt));
  }
  return plot;
}

std::string render_svg(const ScatterPlot& plot) {
  constexpr double W = 640, H = 480, L = 70, R = 20, T = 30, B = 60;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (!plot.points.empty()) {
    x_lo = y_lo = std::numeric_limits<double>::infinity();
    x_hi = y_hi = -x_lo;
    for (const auto& p : plot.points) {
      x_lo = std::min(x_lo, p.x), x_hi = std::max(x_hi, p.x);
      y_lo = std::min(y_lo, p.y), y_hi = std::max(y_hi, p.y);
    }
    if (plot.task == Task::Classification) y_lo = 0, y_hi = 1;
    if (x_hi - x_lo < 1e-9) x_lo -= 1, x_hi += 1;
    if (y_hi - y_lo < 1e-9) y_lo -= 1, y_hi += 1;
  }
  auto sx = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };
  auto num = [](double v) { return fmt6(v); };

  std::map<std::string, std::string> colour = {
      {"healthy", "#2b8a3e"}, {"TTN", "#e67700"}, {"RDS", "#c92a2a"}, {"sick", "#c92a2a"}, {"unknown", "#495057"}};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" + num(H - B) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0, yv = y_lo + (y_hi - y_lo) * i / 4.0;
    s += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(H - B + 18) + "\" font-size=\"11\" text-anchor=\"middle\">" +
         num(xv) + "</text>\n";
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" font-size=\"11\" text-anchor=\"end\">" +
         num(yv) + "</text>\n";
  }
  s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 15) +
       "\" font-size=\"13\" text-anchor=\"middle\">ground-truth SF</text>\n";
  const std::string ylab = plot.task == Task::Regression ? "predicted SF" : "healthy confidence";
  s += "<text x=\"16\" y=\"" + num((T + H - B) / 2) + "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num((T + H - B) / 2) + ")\">" + ylab + "</text>\n";

  auto marker = [&](const std::string& group, double cx, double cy) {
    const std::string fill = colour.contains(group) ? colour[group] : colour["unknown"];
    const std::string style = "fill=\"" + fill + "\" fill-opacity=\"0.75\" data-group=\"" + group + "\"";
    if (group == "healthy") return "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"4\" " + style + "/>\n";
    if (group == "TTN")
      return "<polygon points=\"" + num(cx) + "," + num(cy - 5) + " " + num(cx - 4.5) + "," + num(cy + 4) + " " +
             num(cx + 4.5) + "," + num(cy + 4) + "\" " + style + "/>\n";
    if (group == "RDS" || group == "sick")
      return "<rect x=\"" + num(cx - 4) + "\" y=\"" + num(cy - 4) + "\" width=\"8\" height=\"8\" " + style + "/>\n";
    return "<polygon points=\"" + num(cx) + "," + num(cy - 5) + " " + num(cx + 5) + "," + num(cy) + " " + num(cx) +
           "," + num(cy + 5) + " " + num(cx - 5) + "," + num(cy) + "\" " + style + "/>\n";
  };
  for (const auto& p : plot.points) s += marker(p.group, sx(p.x), sy(p.y));

  std::vector<std::string> groups;
  for (const auto& p : plot.points)
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) groups.push_back(p.group);
  double ly = T + 5;
  for (const auto& g : groups) {
    s += marker(g, W - R - 90, ly);
    s += "<text x=\"" + num(W - R - 80) + "\" y=\"" + num(ly + 4) + "\" font-size=\"11\">" + g + "</text>\n";
    ly += 16;
  }
  s += "</svg>\n";
  return s;
}

std::string scatter_csv(const ScatterPlot& plot) {
  std::string out = "id,group,target_sf,value\n";
  for (const auto& p : plot.points)
    out += csv::join({p.id, p.group, csv::format_double(p.x), csv::format_double(p.y)}) + "\n";
  return out;
}

}  // namespace neolus
