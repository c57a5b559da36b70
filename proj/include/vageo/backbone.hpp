#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vageo/layers.hpp"

namespace vageo {

enum class BackbonePreset { toy_small, paper_resnet18, paper_darknet53 };

std::string to_string(BackbonePreset preset);
BackbonePreset backbone_preset_from_string(const std::string& name);

struct BackboneConfig {
  BackbonePreset preset = BackbonePreset::toy_small;
  // toy_small only: one stride-2 conv stage per entry.
  std::vector<int64_t> stage_channels{16, 32, 64, 64};

  int64_t output_stride() const;
  int64_t output_channels() const;
  // Throws ShapeError unless the stride divides both spatial sizes.
  void check_input(int64_t height, int64_t width) const;
};

// toy_small: [conv3x3/2 -> BN -> ReLU] per stage.
// paper_resnet18: ResNet-18 topology (stem, max-pool, 4x2 basic blocks).
// paper_darknet53: DarkNet-53 topology (leaky ReLU, 1-2-8-8-4 residual stages).
// Weights are randomly initialised; no pretrained weights are loaded.
std::unique_ptr<Sequential> build_backbone(const BackboneConfig& config, int64_t in_channels, std::mt19937_64& rng);

}  // namespace vageo
