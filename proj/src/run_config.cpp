#include "neolus/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neolus/error.hpp"
#include "neolus/split.hpp"

namespace neolus {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("run config: '" + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.contains(k)) throw ConfigError("run config: unknown key '" + (section.empty() ? k : section + "." + k) + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SessionWeighting parse_weighting(const std::string& s) {
  if (s == "frame") return SessionWeighting::Frame;
  if (s == "video") return SessionWeighting::Video;
  throw ConfigError("run config: session_weighting must be 'frame' or 'video'");
}

}  // namespace

void RunConfig::validate() const {
  backbone.validate();
  training.validate();
  augmentation.validate();
  if (head.task != training.strategy) throw ConfigError("run config: head task differs from training strategy");
  (void)parse_scheme(split.scheme);
  if (evaluation.levels.empty()) throw ConfigError("run config: evaluation.levels is empty");
}

std::string run_config_to_json(const RunConfig& c) {
  ojson j;
  j["paths"] = {{"manifest", c.paths.manifest.string()},
                {"output_dir", c.paths.output_dir.string()},
                {"split", c.paths.split.string()},
                {"weights_dir", c.paths.weights_dir.string()}};
  j["backbone"] = {{"name", std::string(to_string(c.backbone.name))},
                   {"input_height", c.backbone.input_height},
                   {"pretrained", c.backbone.pretrained}};
  j["head"] = {{"pooling", std::string(to_string(c.head.pooling))}};
  const auto& t = c.training;
  j["training"] = {{"strategy", std::string(to_string(t.strategy))},
                   {"sf_clip", t.sf_clip},
                   {"sf_norm", t.sf_norm},
                   {"learning_rate", t.learning_rate},
                   {"lr_schedule", std::string(to_string(t.lr_schedule))},
                   {"batch_size", t.batch_size},
                   {"epochs", t.epochs},
                   {"weight_decay", t.weight_decay},
                   {"class_weighting", t.class_weighting},
                   {"fold", t.fold},
                   {"seed", t.seed},
                   {"curriculum",
                    {{"enabled", t.curriculum.enabled},
                     {"easy_min_high", t.curriculum.easy_min_high},
                     {"easy_max_low", t.curriculum.easy_max_low},
                     {"phase1_epochs", t.curriculum.phase1_epochs}}}};
  const auto& a = c.augmentation;
  j["augmentation"] = {{"hflip", a.hflip},
                       {"hflip_probability", a.hflip_probability},
                       {"rotation", a.rotation},
                       {"rotation_degrees", a.rotation_degrees},
                       {"photometric", a.photometric},
                       {"photometric_range", a.photometric_range},
                       {"random_crop", a.random_crop},
                       {"seed", a.seed}};
  j["split"] = {{"scheme", c.split.scheme}, {"seed", c.split.seed}};
  ojson levels = ojson::array();
  for (Level l : c.evaluation.levels) levels.push_back(std::string(to_string(l)));
  j["evaluation"] = {{"levels", levels},
                     {"session_weighting", c.evaluation.session_weighting == SessionWeighting::Frame ? "frame" : "video"}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "", {"paths", "backbone", "head", "training", "augmentation", "split", "evaluation"});
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      check_keys(p, "paths", {"manifest", "output_dir", "split", "weights_dir"});
      if (p.contains("manifest")) c.paths.manifest = p["manifest"].get<std::string>();
      if (p.contains("output_dir")) c.paths.output_dir = p["output_dir"].get<std::string>();
      if (p.contains("split")) c.paths.split = p["split"].get<std::string>();
      if (p.contains("weights_dir")) c.paths.weights_dir = p["weights_dir"].get<std::string>();
    }
    if (j.contains("backbone")) {
      const auto& b = j["backbone"];
      check_keys(b, "backbone", {"name", "input_height", "pretrained"});
      bool pretrained = c.backbone.pretrained;
      read(b, "pretrained", pretrained);
      if (b.contains("name")) c.backbone = BackboneSpec::standard(parse_backbone(b["name"].get<std::string>()), pretrained);
      c.backbone.pretrained = pretrained;
      read(b, "input_height", c.backbone.input_height);
    }
    if (j.contains("head")) {
      check_keys(j["head"], "head", {"pooling"});
      if (j["head"].contains("pooling")) c.head.pooling = parse_pooling(j["head"]["pooling"].get<std::string>());
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      check_keys(t, "training", {"strategy", "sf_clip", "sf_norm", "learning_rate", "lr_schedule", "batch_size",
                                 "epochs", "weight_decay", "class_weighting", "fold", "seed", "curriculum"});
      if (t.contains("strategy")) c.training.strategy = parse_task(t["strategy"].get<std::string>());
      read(t, "sf_clip", c.training.sf_clip);
      read(t, "sf_norm", c.training.sf_norm);
      read(t, "learning_rate", c.training.learning_rate);
      if (t.contains("lr_schedule")) c.training.lr_schedule = parse_lr_schedule(t["lr_schedule"].get<std::string>());
      read(t, "batch_size", c.training.batch_size);
      read(t, "epochs", c.training.epochs);
      read(t, "weight_decay", c.training.weight_decay);
      read(t, "class_weighting", c.training.class_weighting);
      read(t, "fold", c.training.fold);
      read(t, "seed", c.training.seed);
      if (t.contains("curriculum")) {
        const auto& cu = t["curriculum"];
        check_keys(cu, "training.curriculum", {"enabled", "easy_min_high", "easy_max_low", "phase1_epochs"});
        read(cu, "enabled", c.training.curriculum.enabled);
        read(cu, "easy_min_high", c.training.curriculum.easy_min_high);
        read(cu, "easy_max_low", c.training.curriculum.easy_max_low);
        read(cu, "phase1_epochs", c.training.curriculum.phase1_epochs);
      }
    }
    if (j.contains("augmentation")) {
      const auto& a = j["augmentation"];
      check_keys(a, "augmentation", {"hflip", "hflip_probability", "rotation", "rotation_degrees", "photometric",
                                     "photometric_range", "random_crop", "seed"});
      read(a, "hflip", c.augmentation.hflip);
      read(a, "hflip_probability", c.augmentation.hflip_probability);
      read(a, "rotation", c.augmentation.rotation);
      read(a, "rotation_degrees", c.augmentation.rotation_degrees);
      read(a, "photometric", c.augmentation.photometric);
      read(a, "photometric_range", c.augmentation.photometric_range);
      read(a, "random_crop", c.augmentation.random_crop);
      read(a, "seed", c.augmentation.seed);
    }
    if (j.contains("split")) {
      check_keys(j["split"], "split", {"scheme", "seed"});
      read(j["split"], "scheme", c.split.scheme);
      read(j["split"], "seed", c.split.seed);
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      check_keys(e, "evaluation", {"levels", "session_weighting"});
      if (e.contains("levels")) {
        c.evaluation.levels.clear();
        for (const auto& l : e["levels"]) c.evaluation.levels.push_back(parse_level(l.get<std::string>()));
      }
      if (e.contains("session_weighting")) c.evaluation.session_weighting = parse_weighting(e["session_weighting"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.head.task = c.training.strategy;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read run config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write run config '" + path.string() + "'");
  out << run_config_to_json(cfg);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like section.key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json j = json::parse(run_config_to_json(cfg));
  std::string pointer = "/" + key;
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  try {
    const json::json_pointer ptr(pointer);
    if (!j.contains(ptr)) throw ConfigError("run config: unknown key '" + key + "'");
    j[ptr] = value;
    if (key == "backbone.name") j["backbone"].erase("input_height");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg = run_config_from_json(j.dump());
}

void apply_env_overrides(RunConfig& cfg) {
  const char* v = std::getenv(kSeedEnvVar);
  if (!v || !*v) return;
  std::uint64_t seed = 0;
  const std::string s(v);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(std::string(kSeedEnvVar) + " must be a non-negative integer");
  cfg.training.seed = seed;
  cfg.augmentation.seed = seed;
}

}  // namespace neolus
