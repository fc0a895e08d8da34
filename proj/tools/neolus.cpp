// neolus: command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neolus/error.hpp"
#include "neolus/evaluation.hpp"
#include "neolus/log.hpp"
#include "neolus/manifest.hpp"
#include "neolus/metrics.hpp"
#include "neolus/phantom.hpp"
#include "neolus/report.hpp"
#include "neolus/run_config.hpp"
#include "neolus/split.hpp"
#include "neolus/training.hpp"

namespace fs = std::filesystem;
using namespace neolus;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
}

fs::path absolute_or_empty(const fs::path& p) { return p.empty() ? p : fs::absolute(p); }

void finalize_paths(RunConfig& cfg) {
  cfg.paths.manifest = absolute_or_empty(cfg.paths.manifest);
  cfg.paths.output_dir = absolute_or_empty(cfg.paths.output_dir);
  cfg.paths.split = absolute_or_empty(cfg.paths.split);
  cfg.paths.weights_dir = absolute_or_empty(cfg.paths.weights_dir);
}

std::optional<RunConfig> sibling_config(const fs::path& file) {
  const fs::path p = file.parent_path() / "run_config.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    return load_run_config(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Level> parse_levels(const std::string& csv_levels) {
  std::vector<Level> out;
  std::stringstream ss(csv_levels);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(parse_level(tok));
  if (out.empty()) throw ArgumentError("no evaluation levels given");
  return out;
}

// Flags shared by commands that build a RunConfig.
struct ConfigFlags {
  std::string config;
  std::vector<std::string> overrides;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "RunConfig JSON supplying defaults");
    cmd->add_option("--set", overrides, "Override a config key: section.key=value");
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

int cmd_phantom_gen(const std::string& spec_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  PhantomSpec spec = spec_path.empty() ? PhantomSpec{} : phantom_spec_from_json(read_file(spec_path));
  if (seed) spec.seed = *seed;
  const auto ds = generate_dataset(spec, out);
  write_file(out / "phantom_spec.json", phantom_spec_to_json(spec));
  RunConfig cfg;
  cfg.paths.manifest = out / "manifest.csv";
  cfg.paths.output_dir = out;
  finalize_paths(cfg);
  save_run_config(cfg, out / "run_config.json");
  std::cout << render_summary(ds.manifest.summary());
  return 0;
}

int cmd_split(RunConfig cfg, const fs::path& out) {
  if (cfg.paths.manifest.empty()) throw ArgumentError("split: --manifest is required");
  const Manifest m = load_manifest(cfg.paths.manifest);
  const SplitPlan plan = make_split(m, cfg.split.seed, parse_scheme(cfg.split.scheme));
  save_split(plan, out.string());
  cfg.paths.split = out;
  if (cfg.paths.output_dir.empty() || cfg.paths.output_dir == "run") cfg.paths.output_dir = out.parent_path();
  finalize_paths(cfg);
  save_run_config(cfg, fs::absolute(out).parent_path() / "run_config.json");
  std::cout << "wrote " << out.string() << " (" << plan.patient_count() << " patients, " << to_string(plan.scheme)
            << ")\n";
  return 0;
}

int cmd_train(RunConfig cfg) {
  apply_env_overrides(cfg);
  cfg.head.task = cfg.training.strategy;
  cfg.validate();
  if (cfg.paths.manifest.empty()) throw ArgumentError("train: a manifest path is required");
  finalize_paths(cfg);
  const fs::path out = cfg.paths.output_dir;
  fs::create_directories(out);
  const Manifest m = load_manifest(cfg.paths.manifest);
  SplitPlan plan;
  if (cfg.paths.split.empty()) {
    plan = make_split(m, cfg.split.seed, parse_scheme(cfg.split.scheme));
    cfg.paths.split = out / "split.json";
    save_split(plan, cfg.paths.split.string());
  } else {
    plan = load_split(cfg.paths.split.string());
  }
  save_run_config(cfg, out / "run_config.json");

  std::optional<DirectoryWeightProvider> provider;
  if (!cfg.paths.weights_dir.empty()) provider.emplace(cfg.paths.weights_dir);
  TrainOptions opts;
  opts.weights = provider ? &*provider : nullptr;
  opts.log_path = out / "train_log.jsonl";
  auto result = train(m, plan, cfg.training, cfg.backbone, cfg.head, cfg.augmentation, opts);
  save_checkpoint(result.model, result.meta, out / "checkpoint.nck");
  std::cout << "best epoch " << result.best_epoch << "; checkpoint " << (out / "checkpoint.nck").string() << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& checkpoint, const fs::path& manifest_path, const fs::path& split_path,
                 std::optional<int> fold, std::optional<std::string> levels, std::optional<std::string> weighting,
                 std::optional<fs::path> out_dir) {
  RunConfig cfg = sibling_config(checkpoint).value_or(RunConfig{});
  auto loaded = load_checkpoint(checkpoint);
  cfg.backbone = loaded.model.backbone();
  cfg.head = loaded.model.head();
  cfg.training.strategy = cfg.head.task;
  cfg.training.sf_clip = loaded.meta.sf_clip;
  cfg.training.sf_norm = loaded.meta.sf_norm;
  cfg.augmentation.random_crop = loaded.meta.center_crop;
  cfg.paths.manifest = manifest_path;
  cfg.paths.split = split_path;
  if (fold) cfg.training.fold = *fold;
  if (levels) cfg.evaluation.levels = parse_levels(*levels);
  if (weighting) {
    if (*weighting == "frame") cfg.evaluation.session_weighting = SessionWeighting::Frame;
    else if (*weighting == "video") cfg.evaluation.session_weighting = SessionWeighting::Video;
    else throw ArgumentError("--session-weighting must be frame or video");
  }
  cfg.paths.output_dir = out_dir.value_or(checkpoint.parent_path().empty() ? fs::path(".") : checkpoint.parent_path());
  finalize_paths(cfg);

  const Manifest m = load_manifest(manifest_path);
  const SplitPlan plan = load_split(split_path.string());
  if (plan.is_kfold() && cfg.training.fold >= std::get<KFoldScheme>(plan.scheme).k)
    throw ArgumentError("--fold out of range");
  const auto parts = resolve_partitions(plan, cfg.training.fold);
  const auto result = evaluate(loaded.model, loaded.meta, m, parts.test, DecoderRegistry::with_defaults(),
                               cfg.evaluation.levels, cfg.evaluation.session_weighting);
  const fs::path out = cfg.paths.output_dir;
  fs::create_directories(out);
  save_predictions(result.predictions, (out / "predictions.csv").string());
  const std::string json = report_to_json(result.report);
  write_file(out / "metrics.json", json);
  if (!result.flagged_videos.empty()) {
    std::string flagged;
    for (const auto& v : result.flagged_videos) flagged += v + "\n";
    write_file(out / "flagged_videos.txt", flagged);
  }
  cfg.validate();
  save_run_config(cfg, out / "run_config.json");
  std::cout << json;
  return 0;
}

RunLabel label_for(const fs::path& predictions, const std::string& explicit_label) {
  RunLabel label;
  if (auto cfg = sibling_config(predictions)) {
    label.network = std::string(to_string(cfg->backbone.name));
    if (cfg->head.pooling == PoolingKind::PositionPreserving) label.network += "+pp";
    label.input_size = std::to_string(cfg->backbone.input_height);
    label.augmentation = augmentation_label(cfg->augmentation);
  }
  if (!explicit_label.empty()) {
    std::vector<std::string> parts;
    std::stringstream ss(explicit_label);
    for (std::string tok; std::getline(ss, tok, ',');) parts.push_back(tok);
    if (parts.size() != 3) throw ArgumentError("--label must be network,input,augmentation");
    label = {parts[0], parts[1], parts[2]};
  }
  return label;
}

int cmd_report(const std::vector<std::string>& predictions, const std::vector<std::string>& labels,
               const std::string& format, double sf_clip, double sf_norm, const std::string& levels,
               const std::string& out) {
  if (format != "table" && format != "json") throw ArgumentError("--format must be table or json");
  if (!labels.empty() && labels.size() != predictions.size())
    throw ArgumentError("--label must be given once per --predictions");
  if (format == "json" && predictions.size() != 1) throw ArgumentError("--format json takes a single --predictions");
  std::vector<LabeledReport> reports;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto p = load_predictions(predictions[i]);
    ScoreScale scale{sf_clip, sf_norm};
    if (auto cfg = sibling_config(predictions[i]); cfg && sf_clip <= 0) scale = {cfg->training.sf_clip, cfg->training.sf_norm};
    if (scale.sf_clip <= 0) scale = {};
    reports.push_back({label_for(predictions[i], labels.empty() ? "" : labels[i]),
                       compute_report(p, infer_task(p), scale, parse_levels(levels))});
  }
  const std::string text = format == "json" ? report_to_json(reports.front().report) : render_table(reports);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
    RunConfig cfg;
    cfg.paths.output_dir = fs::absolute(out).parent_path();
    cfg.evaluation.levels = parse_levels(levels);
    save_run_config(cfg, fs::absolute(out).parent_path() / "run_config.json");
  }
  return 0;
}

int cmd_plot(const fs::path& predictions, const fs::path& out, const std::string& manifest_path,
             const std::string& level, double sf_clip, double sf_norm) {
  const auto p = load_predictions(predictions.string());
  std::optional<Manifest> m;
  if (!manifest_path.empty()) m = load_manifest(manifest_path);
  ScoreScale scale{sf_clip, sf_norm};
  if (auto cfg = sibling_config(predictions); cfg && sf_clip <= 0) scale = {cfg->training.sf_clip, cfg->training.sf_norm};
  if (scale.sf_clip <= 0) scale = {};
  const auto plot = scatter_data(p, infer_task(p), parse_level(level), scale, m ? &*m : nullptr);
  write_file(out, render_svg(plot));
  fs::path sidecar = out;
  sidecar.replace_extension(".csv");
  write_file(sidecar, scatter_csv(plot));
  RunConfig cfg;
  cfg.paths.manifest = manifest_path;
  cfg.paths.output_dir = fs::absolute(out).parent_path();
  finalize_paths(cfg);
  save_run_config(cfg, cfg.paths.output_dir / "run_config.json");
  std::cout << "wrote " << out.string() << " and " << sidecar.string() << "\n";
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lung-ultrasound severity scoring: phantom data, training, evaluation, reports"};
  app.require_subcommand(1);

  // phantom-gen
  auto* pg = app.add_subcommand("phantom-gen", "Generate a synthetic dataset");
  std::string pg_spec;
  std::string pg_out;
  std::optional<std::uint64_t> pg_seed;
  pg->add_option("--spec", pg_spec, "PhantomSpec JSON");
  pg->add_option("--out", pg_out, "Output directory")->required();
  pg->add_option("--seed", pg_seed, "Override the spec seed");

  // split
  auto* sp = app.add_subcommand("split", "Patient-level split");
  ConfigFlags sp_cfg;
  sp_cfg.add(sp);
  std::string sp_manifest, sp_scheme, sp_out = "split.json";
  std::optional<std::uint64_t> sp_seed;
  sp->add_option("--manifest", sp_manifest, "Manifest CSV");
  sp->add_option("--scheme", sp_scheme, "kfold:K or holdout:a/b/c");
  sp->add_option("--seed", sp_seed, "Split seed");
  sp->add_option("--out", sp_out, "Output split JSON");

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  ConfigFlags tr_cfg;
  tr_cfg.add(tr);
  std::optional<std::string> tr_manifest, tr_out, tr_split, tr_backbone, tr_pooling, tr_task, tr_weights, tr_scheme;
  std::optional<int> tr_epochs, tr_batch, tr_fold, tr_phase1, tr_height;
  std::optional<double> tr_lr;
  std::string tr_lr_schedule;
  std::optional<std::uint64_t> tr_seed, tr_split_seed;
  bool tr_no_pretrained = false, tr_no_aug = false, tr_random_crop = false;
  tr->add_option("--manifest", tr_manifest, "paths.manifest");
  tr->add_option("--out", tr_out, "paths.output_dir");
  tr->add_option("--split", tr_split, "paths.split (made from --scheme when absent)");
  tr->add_option("--weights-dir", tr_weights, "paths.weights_dir");
  tr->add_option("--scheme", tr_scheme, "split.scheme");
  tr->add_option("--split-seed", tr_split_seed, "split.seed");
  tr->add_option("--backbone", tr_backbone, "backbone.name");
  tr->add_option("--input-height", tr_height, "backbone.input_height");
  tr->add_flag("--no-pretrained", tr_no_pretrained, "backbone.pretrained=false");
  tr->add_option("--pooling", tr_pooling, "head.pooling: global_average or position_preserving");
  tr->add_option("--task", tr_task, "training.strategy: regression or classification");
  tr->add_option("--epochs", tr_epochs, "training.epochs");
  tr->add_option("--batch-size", tr_batch, "training.batch_size");
  tr->add_option("--lr", tr_lr, "training.learning_rate");
  tr->add_option("--lr-schedule", tr_lr_schedule, "training.lr_schedule: cosine or constant");
  tr->add_option("--fold", tr_fold, "training.fold");
  tr->add_option("--seed", tr_seed, "training.seed and augmentation.seed");
  tr->add_option("--curriculum-phase1", tr_phase1, "Enable the curriculum with this many easy-only epochs");
  tr->add_flag("--no-augmentation", tr_no_aug, "Disable flip, rotation and photometric augmentation");
  tr->add_flag("--random-crop", tr_random_crop, "augmentation.random_crop=true");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test partition");
  std::string ev_ckpt, ev_manifest, ev_split;
  std::optional<int> ev_fold;
  std::optional<std::string> ev_levels, ev_weighting, ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  ev->add_option("--manifest", ev_manifest, "Manifest CSV")->required();
  ev->add_option("--split", ev_split, "Split JSON")->required();
  ev->add_option("--fold", ev_fold, "Test fold for k-fold splits");
  ev->add_option("--levels", ev_levels, "Comma-separated levels (frame,video,session)");
  ev->add_option("--session-weighting", ev_weighting, "frame or video");
  ev->add_option("--out", ev_out, "Output directory (default: checkpoint directory)");

  // report
  auto* rp = app.add_subcommand("report", "Metrics report from prediction CSVs");
  std::vector<std::string> rp_preds, rp_labels;
  std::string rp_format = "table", rp_levels = "frame,video,session", rp_out;
  double rp_clip = 0, rp_norm = 0;
  rp->add_option("--predictions", rp_preds, "Prediction CSV (repeatable)")->required();
  rp->add_option("--label", rp_labels, "network,input,augmentation per --predictions");
  rp->add_option("--format", rp_format, "table or json");
  rp->add_option("--levels", rp_levels, "Comma-separated levels");
  rp->add_option("--sf-clip", rp_clip, "SF clip (default from run_config.json or 450)");
  rp->add_option("--sf-norm", rp_norm, "SF norm (default from run_config.json or 450)");
  rp->add_option("--out", rp_out, "Write to a file instead of stdout");

  // plot
  auto* pl = app.add_subcommand("plot", "Scatter of predictions against SF");
  std::string pl_preds, pl_out, pl_manifest, pl_level = "session";
  double pl_clip = 0, pl_norm = 0;
  pl->add_option("--predictions", pl_preds, "Prediction CSV")->required();
  pl->add_option("--out", pl_out, "Output SVG")->required();
  pl->add_option("--manifest", pl_manifest, "Manifest for disease markers");
  pl->add_option("--level", pl_level, "frame, video or session");
  pl->add_option("--sf-clip", pl_clip, "SF clip");
  pl->add_option("--sf-norm", pl_norm, "SF norm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=argument_error msg=" << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (pg->parsed()) return cmd_phantom_gen(pg_spec, pg_out, pg_seed);
    if (sp->parsed()) {
      RunConfig cfg = sp_cfg.resolve();
      if (!sp_manifest.empty()) cfg.paths.manifest = sp_manifest;
      if (!sp_scheme.empty()) cfg.split.scheme = sp_scheme;
      if (sp_seed) cfg.split.seed = *sp_seed;
      return cmd_split(cfg, sp_out);
    }
    if (tr->parsed()) {
      RunConfig cfg = tr_cfg.resolve();
      if (tr_manifest) cfg.paths.manifest = *tr_manifest;
      if (tr_out) cfg.paths.output_dir = *tr_out;
      if (tr_split) cfg.paths.split = *tr_split;
      if (tr_weights) cfg.paths.weights_dir = *tr_weights;
      if (tr_scheme) cfg.split.scheme = *tr_scheme;
      if (tr_split_seed) cfg.split.seed = *tr_split_seed;
      if (tr_backbone) cfg.backbone = BackboneSpec::standard(parse_backbone(*tr_backbone), cfg.backbone.pretrained);
      if (tr_height) cfg.backbone.input_height = *tr_height;
      if (tr_no_pretrained) cfg.backbone.pretrained = false;
      if (tr_pooling) cfg.head.pooling = parse_pooling(*tr_pooling);
      if (tr_task) cfg.training.strategy = parse_task(*tr_task);
      if (tr_epochs) cfg.training.epochs = *tr_epochs;
      if (tr_batch) cfg.training.batch_size = *tr_batch;
      if (tr_lr) cfg.training.learning_rate = *tr_lr;
      if (!tr_lr_schedule.empty()) cfg.training.lr_schedule = parse_lr_schedule(tr_lr_schedule);
      if (tr_fold) cfg.training.fold = *tr_fold;
      if (tr_seed) cfg.training.seed = cfg.augmentation.seed = *tr_seed;
      if (tr_phase1) {
        cfg.training.curriculum.enabled = true;
        cfg.training.curriculum.phase1_epochs = *tr_phase1;
      }
      if (tr_no_aug) cfg.augmentation.hflip = cfg.augmentation.rotation = cfg.augmentation.photometric = false;
      if (tr_random_crop) cfg.augmentation.random_crop = true;
      return cmd_train(cfg);
    }
    if (ev->parsed()) {
      std::optional<fs::path> out;
      if (ev_out) out = *ev_out;
      return cmd_evaluate(ev_ckpt, ev_manifest, ev_split, ev_fold, ev_levels, ev_weighting, out);
    }
    if (rp->parsed()) return cmd_report(rp_preds, rp_labels, rp_format, rp_clip, rp_norm, rp_levels, rp_out);
    if (pl->parsed()) return cmd_plot(pl_preds, pl_out, pl_manifest, pl_level, pl_clip, pl_norm);
  } catch (const Error& e) {
    std::cerr << "error: kind=" << e.kind() << " msg=" << one_line(e.what()) << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: kind=io_error msg=" << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=internal msg=" << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
