#include <doctest.h>

#include <cstdlib>
#include <random>

#include "../support/scratch.hpp"
#include "vageo/checkpoint.hpp"
#include "vageo/config.hpp"
#include "vageo/error.hpp"
#include "vageo/npy.hpp"

using namespace vageo;
using testing::ScratchDir;

namespace {

RunConfig tiny_run() {
  RunConfig c = preset_config("toy", QueryView::drone);
  c.stage_channels = {4, 4};
  c.input = {{8, 8}, {8, 8}};
  c.anchors = {3.0, 3.0};
  c.csha.reduction = 2;
  c.csha.kernel = 3;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("presets") {
  const RunConfig d = preset_config("default", QueryView::ground);
  CHECK(d.train.lr0 == 0.0001);
  CHECK(d.train.batch_size == 12);
  CHECK(d.train.epochs == 25);
  CHECK(d.train.halve_every == 10);
  CHECK(d.input.query == ImageDims{128, 256});
  CHECK(d.query_backbone == BackbonePreset::toy_small);
  const RunConfig p = preset_config("full", QueryView::ground);
  CHECK(p.query_backbone == BackbonePreset::paper_resnet18);
  CHECK(p.reference_backbone == BackbonePreset::paper_darknet53);
  CHECK(p.input.query == ImageDims{256, 512});
  CHECK(preset_config("toy").train.lr0 > d.train.lr0);
  CHECK_THROWS_AS(preset_config("huge"), ConfigError);
}

TEST_CASE("run config JSON round trip and overrides") {
  RunConfig c = preset_config("toy", QueryView::ground);
  c.encoder.ground.sigma = 15;
  c.encoder.ground.kernel = GroundKernel::laplace_absolute;
  c.encoder.drone.weights = {0.7, 0.15, 0.1, 0.05};
  c.csha.kernel = 5;
  c.anchors = {20, 30};
  c.data = "d.jsonl";
  const Json j = to_json(c);
  const RunConfig back = merge_json(RunConfig{}, j);
  CHECK(to_json(back) == j);
  CHECK(back.encoder.ground.kernel == GroundKernel::laplace_absolute);

  const RunConfig partial = merge_json(c, Json::parse(R"({"train": {"lr0": 0.5}})"));
  CHECK(partial.train.lr0 == 0.5);
  CHECK(partial.train.batch_size == c.train.batch_size);
  CHECK_THROWS_AS(merge_json(c, Json::parse(R"({"trian": {}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(c, Json::parse(R"({"train": {"lr": 1}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(c, Json::parse(R"({"seed": "x"})")), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig c = preset_config("default");
  CHECK_NOTHROW(c.validate());
  c.input.reference = {250, 256};
  CHECK_THROWS_AS(c.validate(), ShapeError);
  c = preset_config("default");
  c.csha.kernel = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset_config("default");
  c.encoder.drone.weights = {0.1, 0.6, 0.2, 0.1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("output root follows the environment") {
  ::setenv("VAGEO_OUTPUT_ROOT", "/tmp/somewhere", 1);
  CHECK(output_root() == std::filesystem::path("/tmp/somewhere"));
  ::unsetenv("VAGEO_OUTPUT_ROOT");
  CHECK(output_root() == std::filesystem::current_path());
}

TEST_CASE("checkpoint round trip restores parameters, buffers and optimizer state") {
  ScratchDir dir("ckpt");
  const RunConfig c = tiny_run();
  GeoLocalizer model(c.model_config());
  Adam opt(model.registry());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (auto& p : model.registry().params)
    for (auto& g : p.param->grad.values()) g = n(rng);
  opt.step(1e-3);
  opt.step(1e-3);
  for (auto& b : model.registry().buffers)
    for (auto& v : b.tensor->values()) v += 0.25;
  save_checkpoint(dir / "a.vgck", c, model, &opt, 3, 17);

  RunConfig c2 = tiny_run();
  c2.seed = 99;
  GeoLocalizer other(c2.model_config());
  Adam opt2(other.registry());
  const CheckpointHeader h = load_checkpoint(dir / "a.vgck", other, &opt2);
  CHECK(h.epoch == 3);
  CHECK(h.step == 17);
  CHECK(opt2.steps() == 2);
  CHECK(h.config == to_json(c));
  for (size_t k = 0; k < model.registry().params.size(); ++k) {
    CHECK(other.registry().params[k].param->value.storage() == model.registry().params[k].param->value.storage());
    CHECK(opt2.first_moments()[k].storage() == opt.first_moments()[k].storage());
    CHECK(opt2.second_moments()[k].storage() == opt.second_moments()[k].storage());
  }
  for (size_t k = 0; k < model.registry().buffers.size(); ++k)
    CHECK(other.registry().buffers[k].tensor->storage() == model.registry().buffers[k].tensor->storage());
}

TEST_CASE("checkpoint errors") {
  ScratchDir dir("ckpt_err");
  const RunConfig c = tiny_run();
  GeoLocalizer model(c.model_config());
  save_checkpoint(dir / "a.vgck", c, model, nullptr, 0, 0);

  RunConfig wide = tiny_run();
  wide.stage_channels = {4, 6};
  GeoLocalizer other(wide.model_config());
  CHECK_THROWS_AS(load_checkpoint(dir / "a.vgck", other, nullptr), ShapeError);

  Adam opt(model.registry());
  CHECK_THROWS_AS(load_checkpoint(dir / "a.vgck", model, &opt), ValidationError);

  std::string bytes = testing::read_bytes(dir / "a.vgck");
  bytes[8] = 9;  // version field
  testing::write_text_file(dir / "v.vgck", bytes);
  CHECK_THROWS_AS(read_checkpoint_header(dir / "v.vgck"), ParseError);
  testing::write_text_file(dir / "junk.vgck", "not a checkpoint at all");
  CHECK_THROWS_AS(read_checkpoint_header(dir / "junk.vgck"), ParseError);
  CHECK_THROWS_AS(read_checkpoint_header(dir / "missing.vgck"), IoError);
}

TEST_CASE("npy export round trip") {
  ScratchDir dir("npy");
  const std::vector<double> v{0.0, 0.5, 1.0, -2.0, 3.25, 7.0};
  write_npy_f32(dir / "a.npy", v, {2, 3});
  const NpyArray a = read_npy_f32(dir / "a.npy");
  CHECK(a.shape == std::vector<int64_t>{2, 3});
  for (size_t i = 0; i < v.size(); ++i) CHECK(a.values[i] == static_cast<float>(v[i]));
  const std::string bytes = testing::read_bytes(dir / "a.npy");
  CHECK((bytes.size() - 6 * 4) % 64 == 0);
  CHECK_THROWS_AS(write_npy_f32(dir / "b.npy", v, {4, 2}), ShapeError);
}
