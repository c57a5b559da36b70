#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "vageo/backbone.hpp"
#include "vageo/csha.hpp"
#include "vageo/data.hpp"
#include "vageo/model.hpp"
#include "vageo/train.hpp"
#include "vageo/vspe.hpp"

namespace vageo {

using Json = nlohmann::ordered_json;

// Every knob of a run, resolved before the run starts and stored with each
// checkpoint, report and image it produces.
struct RunConfig {
  std::string preset = "default";
  QueryView view = QueryView::drone;
  uint64_t seed = 0;
  EncoderConfig encoder;
  bool use_csha = true;
  CshaOptions csha;
  BackbonePreset query_backbone = BackbonePreset::toy_small;
  BackbonePreset reference_backbone = BackbonePreset::toy_small;
  std::vector<int64_t> stage_channels{16, 32, 64, 64};
  TrainConfig train;
  InputDims input{{128, 128}, {256, 256}};
  Anchors anchors{0.0, 0.0};  // 0 = estimate from the training boxes
  double box_weight = 5.0;
  std::string data;        // manifest path
  std::string output_dir;  // where artifacts go
  std::string checkpoint;

  void validate() const;
  ModelConfig model_config() const;
};

// "default": full training schedule (lr 1e-4, batch 12, 25 epochs) with the toy backbone at desk sizes.
// "toy": desk-scale smoke run with a higher learning rate and short schedule.
// "full": ResNet-18 query / DarkNet-53 reference backbones at the benchmark image sizes.
RunConfig preset_config(const std::string& name, QueryView view = QueryView::drone);

Json to_json(const RunConfig& config);
// Overlays the keys present in `j` on `base`; unknown keys raise ConfigError.
RunConfig merge_json(RunConfig base, const Json& j);
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base);

// Output root: $VAGEO_OUTPUT_ROOT when set, else the current directory.
std::filesystem::path output_root();

}  // namespace vageo
