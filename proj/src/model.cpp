#include "neolus/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "neolus/error.hpp"
#include "neolus/log.hpp"

namespace neolus {

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'E', 'O', 'L', 'U', 'S', 'C', 'K'};
constexpr char kTrunkMagic[8] = {'N', 'E', 'O', 'L', 'U', 'S', 'T', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBackbone {
  BackboneName name;
  const char* label;
  int height;
};

constexpr NamedBackbone kBackbones[] = {
    {BackboneName::AlexNet, "alexnet", 224},
    {BackboneName::ResNet18, "resnet18", 224},
    {BackboneName::ResNet34, "resnet34", 224},
    {BackboneName::ResNet50, "resnet50", 224},
    {BackboneName::EfficientNetB0, "efficientnet_b0", 224},
    {BackboneName::EfficientNetB1, "efficientnet_b1", 240},
    {BackboneName::EfficientNetB2, "efficientnet_b2", 260},
    {BackboneName::TinyNet, "tinynet", 224},
};

void write_blob(std::ofstream& out, const char (&magic)[8], const nlohmann::json& header,
                const std::vector<const std::vector<float>*>& blobs) {
  const std::string text = header.dump();
  out.write(magic, 8);
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* b : blobs)
    out.write(reinterpret_cast<const char*>(b->data()), static_cast<std::streamsize>(b->size() * sizeof(float)));
}

nlohmann::json read_header(std::ifstream& in, const char (&magic)[8], const std::string& what) {
  char m[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  if (!in.read(m, 8) || std::memcmp(m, magic, 8) != 0) throw LoadError(what + ": bad magic");
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version) || version != kCheckpointVersion)
    throw LoadError(what + ": unsupported version");
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1u << 26)) throw LoadError(what + ": bad header");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw LoadError(what + ": truncated header");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(what + ": header is not JSON: " + e.what());
  }
}

std::vector<std::vector<float>> read_blobs(std::ifstream& in, const nlohmann::json& sizes, const std::string& what) {
  std::vector<std::vector<float>> out;
  for (const auto& s : sizes) {
    std::vector<float> v(s.get<std::size_t>());
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float))))
      throw LoadError(what + ": truncated tensor data");
    out.push_back(std::move(v));
  }
  return out;
}

template <class Ptrs>
std::vector<std::size_t> sizes_of(const Ptrs& ptrs) {
  std::vector<std::size_t> s;
  for (const auto* p : ptrs) {
    if constexpr (std::is_same_v<std::remove_cvref_t<decltype(*p)>, nn::Parameter>) {
      s.push_back(p->value.size());
    } else {
      s.push_back(p->size());
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(BackboneName b) {
  for (const auto& nb : kBackbones)
    if (nb.name == b) return nb.label;
  return "?";
}

std::string_view to_string(PoolingKind p) {
  return p == PoolingKind::GlobalAverage ? "global_average" : "position_preserving";
}

BackboneName parse_backbone(std::string_view s) {
  for (const auto& nb : kBackbones)
    if (nb.label == s) return nb.name;
  throw ConfigError("unknown backbone '" + std::string(s) + "'");
}

PoolingKind parse_pooling(std::string_view s) {
  if (s == "global_average") return PoolingKind::GlobalAverage;
  if (s == "position_preserving") return PoolingKind::PositionPreserving;
  throw ConfigError("unknown pooling '" + std::string(s) + "'");
}

const std::vector<BackboneName>& all_backbones() {
  static const std::vector<BackboneName> all = [] {
    std::vector<BackboneName> v;
    for (const auto& nb : kBackbones) v.push_back(nb.name);
    return v;
  }();
  return all;
}

int standard_input_height(BackboneName b) {
  for (const auto& nb : kBackbones)
    if (nb.name == b) return nb.height;
  throw ConfigError("unknown backbone");
}

BackboneSpec BackboneSpec::standard(BackboneName name, bool pretrained) {
  return {name, standard_input_height(name), kInputWidth, pretrained};
}

void BackboneSpec::validate() const {
  if (input_height != standard_input_height(name))
    throw ConfigError(std::string(to_string(name)) + " expects input height " +
                      std::to_string(standard_input_height(name)) + ", got " + std::to_string(input_height));
  if (input_width != kInputWidth && input_width != input_height)
    throw ConfigError("input width must be 461 (or R for the square-crop ablation)");
}

std::optional<TrunkWeights> DirectoryWeightProvider::weights_for(const BackboneSpec& spec) const {
  const auto path = dir_ / (std::string(to_string(spec.name)) + ".trunk");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  const auto header = read_header(in, kTrunkMagic, path.string());
  if (header.value("backbone", "") != to_string(spec.name))
    throw LoadError(path.string() + ": weights are for backbone '" + header.value("backbone", "") + "'");
  TrunkWeights w;
  w.parameters = read_blobs(in, header.at("parameters"), path.string());
  w.buffers = read_blobs(in, header.at("buffers"), path.string());
  return w;
}

Model::Model(BackboneSpec backbone, HeadSpec head, std::unique_ptr<nn::Sequential> trunk, std::uint64_t seed)
    : backbone_(backbone), head_(head), trunk_(std::move(trunk)), pool_(std::make_unique<PoolingLayer>(head.pooling)) {
  feature_ = trunk_->output_shape({1, 3, backbone_.input_height, backbone_.input_width});
  pooled_shape_ = pool_->output_shape(feature_);
  Rng rng(derive_seed(seed, 0x4ead));
  linear_ = std::make_unique<nn::Linear>(pooled_shape_.c * pooled_shape_.h * pooled_shape_.w, 1, rng);
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

nn::Tensor Model::make_batch(std::span<const FrameTensor* const> frames) const {
  nn::Tensor batch(static_cast<int>(frames.size()), 3, backbone_.input_height, backbone_.input_width);
  const std::size_t plane = static_cast<std::size_t>(backbone_.input_height) * backbone_.input_width;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameTensor& f = *frames[i];
    if (f.height != backbone_.input_height || f.width != backbone_.input_width)
      throw ArgumentError(std::string(to_string(backbone_.name)) + " expects " + std::to_string(backbone_.input_height) +
                          "x" + std::to_string(backbone_.input_width) + " input, got " + std::to_string(f.height) +
                          "x" + std::to_string(f.width));
    for (int c = 0; c < 3; ++c) std::copy_n(f.pixels.data(), plane, batch.plane(static_cast<int>(i), c));
  }
  return batch;
}

nn::Tensor Model::trunk_features(const nn::Tensor& batch) { return trunk_->forward(batch, false); }

nn::Tensor Model::forward_raw(const nn::Tensor& batch, bool training) {
  if (batch.c() != 3 || batch.h() != backbone_.input_height || batch.w() != backbone_.input_width)
    throw ArgumentError(std::string(to_string(backbone_.name)) + " expects (N, 3, " +
                        std::to_string(backbone_.input_height) + ", " + std::to_string(backbone_.input_width) +
                        ") input, got " + batch.shape().str());
  return linear_->forward(pool_->forward(trunk_->forward(batch, training), training), training);
}

void Model::backward(const nn::Tensor& grad_raw) {
  nn::Tensor g = linear_->backward(grad_raw);
  g = g.reshaped({grad_raw.n(), pooled_shape_.c, pooled_shape_.h, pooled_shape_.w});
  trunk_->backward(pool_->backward(g));
}

std::vector<float> Model::predict(std::span<const FrameTensor* const> frames, int batch_size) {
  std::vector<float> out;
  out.reserve(frames.size());
  for (std::size_t start = 0; start < frames.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(frames.size() - start, static_cast<std::size_t>(batch_size));
    const nn::Tensor raw = forward_raw(make_batch(frames.subspan(start, n)), false);
    for (std::size_t i = 0; i < n; ++i) {
      const float r = raw[i];
      out.push_back(head_.task == Task::Classification ? 1.0f / (1.0f + std::exp(-r)) : r);
    }
  }
  return out;
}

std::vector<nn::Parameter*> Model::trunk_parameters() {
  std::vector<nn::Parameter*> ps;
  trunk_->parameters(ps);
  return ps;
}

std::vector<nn::Tensor*> Model::trunk_buffers() {
  std::vector<nn::Tensor*> bs;
  trunk_->buffers(bs);
  return bs;
}

std::vector<nn::Parameter*> Model::parameters() {
  auto ps = trunk_parameters();
  linear_->parameters(ps);
  return ps;
}

std::vector<nn::Tensor*> Model::buffers() { return trunk_buffers(); }

std::vector<std::vector<float>> Model::snapshot() {
  std::vector<std::vector<float>> state;
  for (auto* p : parameters()) state.emplace_back(p->value.span().begin(), p->value.span().end());
  for (auto* b : buffers()) state.emplace_back(b->span().begin(), b->span().end());
  return state;
}

void Model::restore(const std::vector<std::vector<float>>& state) {
  auto ps = parameters();
  auto bs = buffers();
  if (state.size() != ps.size() + bs.size()) throw ArgumentError("state does not match model layout");
  std::size_t k = 0;
  auto copy_into = [&](std::span<float> dst) {
    if (state[k].size() != dst.size()) throw ArgumentError("state tensor size mismatch");
    std::copy(state[k].begin(), state[k].end(), dst.begin());
    ++k;
  };
  for (auto* p : ps) copy_into(p->value.span());
  for (auto* b : bs) copy_into(b->span());
}

Model build_model(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed,
                  const WeightProvider* provider) {
  backbone.validate();
  Rng rng(derive_seed(seed, 0x7a11));
  Model model(backbone, head, make_trunk(backbone.name, rng), seed);
  if (backbone.pretrained) {
    std::optional<TrunkWeights> w = provider ? provider->weights_for(backbone) : std::nullopt;
    if (!w) {
      log_warning("no pretrained weights available for " + std::string(to_string(backbone.name)) +
                  "; using random initialization");
    } else {
      auto ps = model.trunk_parameters();
      auto bs = model.trunk_buffers();
      if (w->parameters.size() != ps.size() || w->buffers.size() != bs.size())
        throw ConfigError("pretrained weights do not match the " + std::string(to_string(backbone.name)) + " layout");
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (w->parameters[i].size() != ps[i]->value.size()) throw ConfigError("pretrained parameter size mismatch");
        std::copy(w->parameters[i].begin(), w->parameters[i].end(), ps[i]->value.data());
      }
      for (std::size_t i = 0; i < bs.size(); ++i) {
        if (w->buffers[i].size() != bs[i]->size()) throw ConfigError("pretrained buffer size mismatch");
        std::copy(w->buffers[i].begin(), w->buffers[i].end(), bs[i]->data());
      }
    }
  }
  return model;
}

void save_checkpoint(Model& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  const auto state = model.snapshot();
  nlohmann::ordered_json h;
  h["backbone"] = {{"name", to_string(model.backbone().name)},
                   {"input_height", model.backbone().input_height},
                   {"input_width", model.backbone().input_width},
                   {"pretrained", model.backbone().pretrained}};
  h["head"] = {{"pooling", to_string(model.head().pooling)}, {"task", to_string(model.head().task)}};
  h["preprocess"] = {{"rows", model.backbone().input_height}, {"width", model.backbone().input_width},
                     {"center_crop", meta.center_crop}};
  h["targets"] = {{"sf_clip", meta.sf_clip}, {"sf_norm", meta.sf_norm}};
  h["parameters"] = sizes_of(model.parameters());
  h["buffers"] = sizes_of(model.buffers());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  std::vector<const std::vector<float>*> blobs;
  for (const auto& s : state) blobs.push_back(&s);
  write_blob(out, kCheckpointMagic, h, blobs);
  if (!out) throw IoError("short write to checkpoint '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
  const auto h = read_header(in, kCheckpointMagic, path.string());
  try {
    BackboneSpec b;
    b.name = parse_backbone(h.at("backbone").at("name").get<std::string>());
    b.input_height = h.at("backbone").at("input_height").get<int>();
    b.input_width = h.at("backbone").at("input_width").get<int>();
    b.pretrained = h.at("backbone").value("pretrained", false);
    b.validate();
    HeadSpec head;
    head.pooling = parse_pooling(h.at("head").at("pooling").get<std::string>());
    head.task = parse_task(h.at("head").at("task").get<std::string>());
    CheckpointMeta meta;
    meta.sf_clip = h.at("targets").at("sf_clip").get<double>();
    meta.sf_norm = h.at("targets").at("sf_norm").get<double>();
    meta.center_crop = h.at("preprocess").value("center_crop", false);
    // Constructed directly: the weights come from the file, never from a provider.
    Rng rng(0);
    Model model(b, head, make_trunk(b.name, rng), 0);
    auto state = read_blobs(in, h.at("parameters"), path.string());
    auto buffers = read_blobs(in, h.at("buffers"), path.string());
    state.insert(state.end(), std::make_move_iterator(buffers.begin()), std::make_move_iterator(buffers.end()));
    try {
      model.restore(state);
    } catch (const ArgumentError& e) {
      throw LoadError(path.string() + ": " + e.what());
    }
    return LoadedCheckpoint{std::move(model), meta};
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": checkpoint header schema violation: " + e.what());
  }
}

void save_trunk_weights(Model& model, const std::filesystem::path& path) {
  std::vector<std::vector<float>> params, bufs;
  for (auto* p : model.trunk_parameters()) params.emplace_back(p->value.span().begin(), p->value.span().end());
  for (auto* b : model.trunk_buffers()) bufs.emplace_back(b->span().begin(), b->span().end());
  nlohmann::ordered_json h;
  h["backbone"] = to_string(model.backbone().name);
  std::vector<std::size_t> ps, bs;
  for (const auto& p : params) ps.push_back(p.size());
  for (const auto& b : bufs) bs.push_back(b.size());
  h["parameters"] = ps;
  h["buffers"] = bs;
  std::vector<const std::vector<float>*> blobs;
  for (const auto& p : params) blobs.push_back(&p);
  for (const auto& b : bufs) blobs.push_back(&b);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights '" + path.string() + "'");
  write_blob(out, kTrunkMagic, h, blobs);
}

}  // namespace neolus
