#pragma once

#include <random>

#include "vageo/layers.hpp"
#include "vageo/ops.hpp"
#include "vageo/tensor.hpp"

// Channel-spatial hybrid attention: channel reweighting (global average pool
// -> two bias-free linear maps -> sigmoid) followed by spatial reweighting
// (channel mean/max pair -> conv -> batchnorm -> relu -> sigmoid).
namespace vageo {

struct ChannelAttentionParams {
  int64_t channels = 0;
  int64_t reduction = 16;
  Tensor w1;  // channels x hidden
  Tensor w2;  // hidden x channels

  int64_t hidden() const { return hidden_width(channels, reduction); }
  static int64_t hidden_width(int64_t channels, int64_t reduction);
  static ChannelAttentionParams zeros(int64_t channels, int64_t reduction = 16);
};

struct ChannelAttentionResult {
  Tensor output;   // B x C x H x W
  Tensor weights;  // B x C, strictly inside (0, 1)
  Tensor pooled;   // B x C
  Tensor hidden_pre;
};

ChannelAttentionResult channel_attention(const Tensor& f, const ChannelAttentionParams& params);

struct ChannelAttentionGrad {
  Tensor input;
  Tensor w1;
  Tensor w2;
};

ChannelAttentionGrad channel_attention_backward(const Tensor& f, const ChannelAttentionParams& params,
                                                const ChannelAttentionResult& forward, const Tensor& grad_out);

struct SpatialAttentionParams {
  int64_t kernel = 7;
  Tensor conv_weight;  // 1 x 2 x k x k
  Tensor conv_bias;    // 1
  ops::BatchNormState bn;
  bool relu = true;  // false drops the ReLU between batchnorm and sigmoid

  void validate() const;
  // Zero convolution and an identity-initialised batchnorm.
  static SpatialAttentionParams zeros(int64_t kernel = 7);
};

struct SpatialPoolPair {
  Tensor p_avg;  // B x 1 x H x W
  Tensor p_max;  // B x 1 x H x W
  Tensor p_cat;  // B x 2 x H x W
  std::vector<int64_t> argmax_channel;
};

SpatialPoolPair spatial_pool_pair(const Tensor& f);

struct SpatialAttentionResult {
  Tensor output;
  Tensor weights;  // B x 1 x H x W, in [0.5, 1) with the ReLU enabled
  SpatialPoolPair pools;
  Tensor conv_out;
  Tensor bn_out;
  ops::BatchNormCache bn_cache;
};

// Pure: batch statistics are reported in bn_cache; running statistics are
// left to the caller.
SpatialAttentionResult spatial_attention(const Tensor& f, const SpatialAttentionParams& params,
                                         Mode mode = Mode::eval);

struct SpatialAttentionGrad {
  Tensor input;
  Tensor conv_weight;
  Tensor conv_bias;
  Tensor bn_gamma;
  Tensor bn_beta;
};

SpatialAttentionGrad spatial_attention_backward(const Tensor& f, const SpatialAttentionParams& params,
                                                const SpatialAttentionResult& forward, const Tensor& grad_out);

struct CshaResult {
  ChannelAttentionResult channel;
  SpatialAttentionResult spatial;
  const Tensor& output() const { return spatial.output; }
};

CshaResult csha_forward(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp,
                        Mode mode = Mode::eval);

struct CshaGrad {
  Tensor input;
  ChannelAttentionGrad channel;
  SpatialAttentionGrad spatial;
};

CshaGrad csha_backward(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp,
                       const CshaResult& forward, const Tensor& grad_out);

struct CshaOptions {
  int64_t reduction = 16;
  int64_t kernel = 7;
  bool relu = true;
  bool channel = true;  // ablation switches
  bool spatial = true;
};

// Trainable CSHA block holding its parameters as registry-visible Params.
class CshaBlock : public Layer {
 public:
  CshaBlock(int64_t channels, const CshaOptions& options, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void register_params(ParamRegistry& registry, const std::string& prefix) override;
  Shape output_shape(const Shape& input) const override { return input; }

  ChannelAttentionParams channel_params() const;
  SpatialAttentionParams spatial_params() const;
  const CshaOptions& options() const { return options_; }
  // Spatial weights of the most recent forward pass (empty if spatial is off).
  const Tensor& last_spatial_weights() const { return spatial_.weights; }

 private:
  CshaOptions options_;
  int64_t channels_;
  Param w1_, w2_, conv_weight_, conv_bias_, gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor input_;
  ChannelAttentionResult channel_;
  SpatialAttentionResult spatial_;
};

}  // namespace vageo
