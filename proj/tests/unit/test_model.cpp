#include <doctest.h>

#include <map>

#include "neolus/error.hpp"
#include "neolus/model.hpp"
#include "support.hpp"

using namespace neolus;

namespace {

struct Reference {
  std::size_t trunk_params;
  nn::Shape features;  // at the native height and width 461
};

// Parameter counts and output shapes of the matching torchvision feature extractors.
const std::map<BackboneName, Reference> kReference = {
    {BackboneName::AlexNet, {2469696, {1, 256, 6, 13}}},
    {BackboneName::ResNet18, {11176512, {1, 512, 7, 15}}},
    {BackboneName::ResNet34, {21284672, {1, 512, 7, 15}}},
    {BackboneName::ResNet50, {23508032, {1, 2048, 7, 15}}},
    {BackboneName::EfficientNetB0, {4007548, {1, 1280, 7, 15}}},
    {BackboneName::EfficientNetB1, {6513184, {1, 1280, 8, 15}}},
    {BackboneName::EfficientNetB2, {7700994, {1, 1408, 9, 15}}},
};

std::size_t count(nn::Module& m) { return nn::parameter_count(m); }

}  // namespace

TEST_CASE("backbone trunks match reference layouts") {
  for (const auto& [name, ref] : kReference) {
    CAPTURE(to_string(name));
    Rng rng(0);
    auto trunk = make_trunk(name, rng);
    CHECK(count(*trunk) == ref.trunk_params);
    CHECK(trunk->output_shape({1, 3, standard_input_height(name), kInputWidth}) == ref.features);
  }
}

TEST_CASE("native input heights") {
  CHECK(standard_input_height(BackboneName::ResNet34) == 224);
  CHECK(standard_input_height(BackboneName::EfficientNetB1) == 240);
  CHECK(standard_input_height(BackboneName::EfficientNetB2) == 260);
  BackboneSpec b1 = BackboneSpec::standard(BackboneName::EfficientNetB1);
  CHECK_NOTHROW(b1.validate());
  b1.input_height = 224;
  CHECK_THROWS_AS(b1.validate(), ConfigError);
  CHECK_THROWS_AS(parse_backbone("vgg16"), ConfigError);
  CHECK(parse_backbone("efficientnet_b2") == BackboneName::EfficientNetB2);
}

TEST_CASE("resnet34 forward contract and probed position-preserving head") {
  testing::WarningCapture quiet;
  Model ga = build_model(BackboneSpec::standard(BackboneName::ResNet34, false),
                         {PoolingKind::GlobalAverage, Task::Classification}, 1);
  Model pp = build_model(BackboneSpec::standard(BackboneName::ResNet34, false),
                         {PoolingKind::PositionPreserving, Task::Classification}, 1);
  CHECK(ga.head_in_features() == 512);
  CHECK(pp.head_in_features() == pp.feature_channels() * pp.feature_width());
  CHECK(pp.feature_width() == 15);
  CHECK(pp.parameter_count() > ga.parameter_count());

  std::vector<FrameTensor> frames(2, FrameTensor(224, kInputWidth, 0.3f));
  frames[1].pixels[1000] = 1.0f;
  std::vector<const FrameTensor*> ptrs = {&frames[0], &frames[1]};
  const auto scores = ga.predict(ptrs);
  REQUIRE(scores.size() == 2);
  for (float s : scores) {
    CHECK(s >= 0.0f);
    CHECK(s <= 1.0f);
  }
  const nn::Tensor raw = ga.forward_raw(ga.make_batch(ptrs), false);
  CHECK(raw.shape() == (nn::Shape{2, 1, 1, 1}));
  std::vector<FrameTensor> wrong(1, FrameTensor(240, kInputWidth));
  std::vector<const FrameTensor*> wp = {&wrong[0]};
  CHECK_THROWS_AS(ga.make_batch(wp), ArgumentError);
}

TEST_CASE("position-preserving head costs parameters on every backbone") {
  testing::WarningCapture quiet;
  for (BackboneName name : all_backbones()) {
    CAPTURE(to_string(name));
    Model ga = build_model(BackboneSpec::standard(name, false), {PoolingKind::GlobalAverage, Task::Regression});
    Model pp = build_model(BackboneSpec::standard(name, false), {PoolingKind::PositionPreserving, Task::Regression});
    CHECK(pp.parameter_count() > ga.parameter_count());
    CHECK(pp.head_in_features() == pp.feature_channels() * pp.feature_width());
  }
}

TEST_CASE("checkpoint round-trip reproduces predictions") {
  testing::TempDir dir;
  Model m = build_model(BackboneSpec::standard(BackboneName::TinyNet, false),
                        {PoolingKind::PositionPreserving, Task::Regression}, 3);
  Rng rng(4);
  std::vector<FrameTensor> frames(3, FrameTensor(224, kInputWidth));
  for (auto& f : frames)
    for (auto& v : f.pixels) v = static_cast<float>(rng.uniform());
  std::vector<const FrameTensor*> ptrs;
  for (auto& f : frames) ptrs.push_back(&f);
  const auto before = m.predict(ptrs);
  save_checkpoint(m, {400.0, 420.0, false}, dir / "m.nck");
  auto loaded = load_checkpoint(dir / "m.nck");
  CHECK(loaded.meta.sf_clip == 400.0);
  CHECK(loaded.meta.sf_norm == 420.0);
  CHECK(loaded.model.head().pooling == PoolingKind::PositionPreserving);
  CHECK(loaded.model.head().task == Task::Regression);
  CHECK(loaded.model.predict(ptrs) == before);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.nck"), Error);
}

TEST_CASE("pretrained trunks come from the provider, else a warning") {
  testing::TempDir dir;
  Model source = build_model(BackboneSpec::standard(BackboneName::TinyNet, false),
                             {PoolingKind::GlobalAverage, Task::Classification}, 9);
  save_trunk_weights(source, dir / "tinynet.trunk");
  DirectoryWeightProvider provider(dir.path());
  Model warm = build_model(BackboneSpec::standard(BackboneName::TinyNet, true),
                           {PoolingKind::PositionPreserving, Task::Classification}, 1, &provider);
  const auto a = source.trunk_parameters();
  const auto b = warm.trunk_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::equal(a[i]->value.span().begin(), a[i]->value.span().end(), b[i]->value.span().begin()));

  testing::WarningCapture cap;
  DirectoryWeightProvider empty(dir / "nothing");
  build_model(BackboneSpec::standard(BackboneName::ResNet18, true), {}, 0, &empty);
  CHECK(cap.warnings.size() == 1);
}
