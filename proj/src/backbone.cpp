#include "vageo/backbone.hpp"

#include "vageo/error.hpp"

namespace vageo {
namespace {

std::unique_ptr<Layer> resnet_basic_block(int64_t in_channels, int64_t out_channels, int64_t stride,
                                          std::mt19937_64& rng) {
  auto main = std::make_unique<Sequential>();
  main->emplace<Conv2d>(in_channels, out_channels, 3, stride, 1, false, rng);
  main->emplace<BatchNorm2d>(out_channels);
  main->emplace<Activate>(Activation::relu);
  main->emplace<Conv2d>(out_channels, out_channels, 3, 1, 1, false, rng);
  main->emplace<BatchNorm2d>(out_channels);
  std::unique_ptr<Sequential> shortcut;
  if (stride != 1 || in_channels != out_channels) {
    shortcut = std::make_unique<Sequential>();
    shortcut->emplace<Conv2d>(in_channels, out_channels, 1, stride, 0, false, rng);
    shortcut->emplace<BatchNorm2d>(out_channels);
  }
  return std::make_unique<Residual>(std::move(main), std::move(shortcut), std::make_unique<Activate>(Activation::relu));
}

std::unique_ptr<Layer> darknet_residual(int64_t channels, std::mt19937_64& rng) {
  auto main = std::make_unique<Sequential>();
  main->add(conv_bn_act(channels, channels / 2, 1, 1, Activation::leaky_relu, rng));
  main->add(conv_bn_act(channels / 2, channels, 3, 1, Activation::leaky_relu, rng));
  return std::make_unique<Residual>(std::move(main), nullptr, nullptr);
}

}  // namespace

std::string to_string(BackbonePreset preset) {
  switch (preset) {
    case BackbonePreset::toy_small: return "toy-small";
    case BackbonePreset::paper_resnet18: return "paper-resnet18";
    case BackbonePreset::paper_darknet53: return "paper-darknet53";
  }
  return "unknown";
}

BackbonePreset backbone_preset_from_string(const std::string& name) {
  if (name == "toy-small") return BackbonePreset::toy_small;
  if (name == "paper-resnet18") return BackbonePreset::paper_resnet18;
  if (name == "paper-darknet53") return BackbonePreset::paper_darknet53;
  throw ConfigError("unknown backbone preset '" + name + "'");
}

int64_t BackboneConfig::output_stride() const {
  if (preset == BackbonePreset::toy_small) return int64_t{1} << stage_channels.size();
  return 32;
}

int64_t BackboneConfig::output_channels() const {
  switch (preset) {
    case BackbonePreset::toy_small: return stage_channels.empty() ? 0 : stage_channels.back();
    case BackbonePreset::paper_resnet18: return 512;
    case BackbonePreset::paper_darknet53: return 1024;
  }
  return 0;
}

void BackboneConfig::check_input(int64_t height, int64_t width) const {
  const int64_t stride = output_stride();
  if (height < stride || width < stride || height % stride != 0 || width % stride != 0) {
    throw ShapeError("input " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by backbone stride " + std::to_string(stride));
  }
}

std::unique_ptr<Sequential> build_backbone(const BackboneConfig& config, int64_t in_channels, std::mt19937_64& rng) {
  auto net = std::make_unique<Sequential>();
  switch (config.preset) {
    case BackbonePreset::toy_small: {
      if (config.stage_channels.empty()) throw ConfigError("toy-small backbone needs at least one stage");
      int64_t c = in_channels;
      for (int64_t out : config.stage_channels) {
        net->add(conv_bn_act(c, out, 3, 2, Activation::relu, rng));
        c = out;
      }
      break;
    }
    case BackbonePreset::paper_resnet18: {
      net->add(conv_bn_act(in_channels, 64, 7, 2, Activation::relu, rng));
      net->emplace<MaxPool2d>(3, 2, 1);
      int64_t c = 64;
      for (int64_t stage = 0; stage < 4; ++stage) {
        const int64_t out = 64 << stage;
        net->add(resnet_basic_block(c, out, stage == 0 ? 1 : 2, rng));
        net->add(resnet_basic_block(out, out, 1, rng));
        c = out;
      }
      break;
    }
    case BackbonePreset::paper_darknet53: {
      net->add(conv_bn_act(in_channels, 32, 3, 1, Activation::leaky_relu, rng));
      const int64_t repeats[] = {1, 2, 8, 8, 4};
      int64_t c = 32;
      for (int64_t stage = 0; stage < 5; ++stage) {
        const int64_t out = 64 << stage;
        net->add(conv_bn_act(c, out, 3, 2, Activation::leaky_relu, rng));
        for (int64_t r = 0; r < repeats[stage]; ++r) net->add(darknet_residual(out, rng));
        c = out;
      }
      break;
    }
  }
  return net;
}

}  // namespace vageo
