#include "vageo/csha.hpp"

#include <algorithm>
#include <cmath>

#include "vageo/error.hpp"

namespace vageo {
namespace {

void check_feature_map(const Tensor& f) {
  if (f.rank() != 4 || f.dim(0) < 1 || f.dim(1) < 1 || f.dim(2) < 1 || f.dim(3) < 1) {
    throw ShapeError("feature map must be B x C x H x W with positive sizes, got " + shape_string(f.shape()));
  }
}

ops::Conv2dGeometry same_padding(int64_t kernel) { return {1, (kernel - 1) / 2}; }

}  // namespace

int64_t ChannelAttentionParams::hidden_width(int64_t channels, int64_t reduction) {
  if (reduction < 1) throw ConfigError("channel attention reduction must be >= 1");
  return std::max<int64_t>(1, channels / reduction);
}

ChannelAttentionParams ChannelAttentionParams::zeros(int64_t channels, int64_t reduction) {
  const int64_t hidden = hidden_width(channels, reduction);
  return {channels, reduction, Tensor({channels, hidden}), Tensor({hidden, channels})};
}

ChannelAttentionResult channel_attention(const Tensor& f, const ChannelAttentionParams& params) {
  check_feature_map(f);
  const int64_t batch = f.dim(0), channels = f.dim(1), plane = f.dim(2) * f.dim(3);
  const int64_t hidden = params.hidden();
  if (params.channels != channels || params.w1.shape() != Shape{channels, hidden} ||
      params.w2.shape() != Shape{hidden, channels}) {
    throw ShapeError("channel attention parameters sized for " + std::to_string(params.channels) +
                     " channels, feature map has " + std::to_string(channels));
  }
  ChannelAttentionResult r;
  r.pooled = ops::global_avg_pool(f);
  r.hidden_pre = Tensor({batch, hidden});
  r.weights = Tensor({batch, channels});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t k = 0; k < hidden; ++k) {
      double s = 0.0;
      for (int64_t c = 0; c < channels; ++c) s += r.pooled[b * channels + c] * params.w1[c * hidden + k];
      r.hidden_pre[b * hidden + k] = s;
    }
    for (int64_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (int64_t k = 0; k < hidden; ++k) s += std::max(0.0, r.hidden_pre[b * hidden + k]) * params.w2[k * channels + c];
      r.weights[b * channels + c] = ops::sigmoid(s);
    }
  }
  r.output = Tensor(f.shape());
  for (int64_t p = 0; p < batch * channels; ++p) {
    const double w = r.weights[p];
    for (int64_t i = 0; i < plane; ++i) r.output[p * plane + i] = f[p * plane + i] * w;
  }
  return r;
}

ChannelAttentionGrad channel_attention_backward(const Tensor& f, const ChannelAttentionParams& params,
                                                const ChannelAttentionResult& fwd, const Tensor& grad_out) {
  const int64_t batch = f.dim(0), channels = f.dim(1), plane = f.dim(2) * f.dim(3);
  const int64_t hidden = params.hidden();
  ChannelAttentionGrad g{Tensor(f.shape()), Tensor(params.w1.shape()), Tensor(params.w2.shape())};
  Tensor grad_logit({batch, channels});
  for (int64_t p = 0; p < batch * channels; ++p) {
    const double w = fwd.weights[p];
    double dw = 0.0;
    for (int64_t i = 0; i < plane; ++i) {
      dw += grad_out[p * plane + i] * f[p * plane + i];
      g.input[p * plane + i] = grad_out[p * plane + i] * w;
    }
    grad_logit[p] = dw * w * (1.0 - w);
  }
  Tensor grad_pooled({batch, channels});
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t k = 0; k < hidden; ++k) {
      const double pre = fwd.hidden_pre[b * hidden + k];
      const double h = std::max(0.0, pre);
      double dh = 0.0;
      for (int64_t c = 0; c < channels; ++c) {
        g.w2[k * channels + c] += h * grad_logit[b * channels + c];
        dh += grad_logit[b * channels + c] * params.w2[k * channels + c];
      }
      const double dpre = pre > 0 ? dh : 0.0;
      for (int64_t c = 0; c < channels; ++c) {
        g.w1[c * hidden + k] += fwd.pooled[b * channels + c] * dpre;
        grad_pooled[b * channels + c] += dpre * params.w1[c * hidden + k];
      }
    }
  }
  g.input += ops::global_avg_pool_backward(f.shape(), grad_pooled);
  return g;
}

void SpatialAttentionParams::validate() const {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("spatial attention kernel size must be odd, got " + std::to_string(kernel));
  if (conv_weight.shape() != Shape{1, 2, kernel, kernel}) throw ShapeError("spatial attention conv weight must be 1x2xkxk");
  if (conv_bias.size() != 1 || bn.gamma.size() != 1 || bn.beta.size() != 1 || bn.running_mean.size() != 1 ||
      bn.running_var.size() != 1) {
    throw ShapeError("spatial attention expects single-channel conv bias and batchnorm");
  }
}

SpatialAttentionParams SpatialAttentionParams::zeros(int64_t kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("spatial attention kernel size must be odd, got " + std::to_string(kernel));
  SpatialAttentionParams p;
  p.kernel = kernel;
  p.conv_weight = Tensor({1, 2, kernel, kernel});
  p.conv_bias = Tensor({1});
  p.bn.gamma = Tensor({1}, 1.0);
  p.bn.beta = Tensor({1}, 0.0);
  p.bn.running_mean = Tensor({1}, 0.0);
  p.bn.running_var = Tensor({1}, 1.0);
  return p;
}

SpatialPoolPair spatial_pool_pair(const Tensor& f) {
  check_feature_map(f);
  const int64_t batch = f.dim(0), channels = f.dim(1), h = f.dim(2), w = f.dim(3), plane = h * w;
  SpatialPoolPair pair{Tensor({batch, 1, h, w}), Tensor({batch, 1, h, w}), Tensor(), {}};
  pair.argmax_channel.assign(static_cast<size_t>(batch * plane), 0);
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t i = 0; i < plane; ++i) {
      double sum = 0.0, best = f[(b * channels) * plane + i];
      int64_t best_c = 0;
      for (int64_t c = 0; c < channels; ++c) {
        const double v = f[(b * channels + c) * plane + i];
        sum += v;
        if (v > best) {
          best = v;
          best_c = c;
        }
      }
      pair.p_avg[b * plane + i] = sum / static_cast<double>(channels);
      pair.p_max[b * plane + i] = best;
      pair.argmax_channel[static_cast<size_t>(b * plane + i)] = best_c;
    }
  }
  pair.p_cat = concat_channels(pair.p_avg, pair.p_max);
  return pair;
}

SpatialAttentionResult spatial_attention(const Tensor& f, const SpatialAttentionParams& params, Mode mode) {
  params.validate();
  SpatialAttentionResult r;
  r.pools = spatial_pool_pair(f);
  r.conv_out = ops::conv2d(r.pools.p_cat, params.conv_weight, params.conv_bias, same_padding(params.kernel));
  r.bn_out = ops::batchnorm(r.conv_out, params.bn, mode, r.bn_cache);
  r.weights = Tensor(r.bn_out.shape());
  for (size_t i = 0; i < r.weights.size(); ++i) {
    const double z = params.relu ? std::max(0.0, r.bn_out[i]) : r.bn_out[i];
    r.weights[i] = ops::sigmoid(z);
  }
  const int64_t batch = f.dim(0), channels = f.dim(1), plane = f.dim(2) * f.dim(3);
  r.output = Tensor(f.shape());
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t c = 0; c < channels; ++c) {
      for (int64_t i = 0; i < plane; ++i) {
        r.output[(b * channels + c) * plane + i] = f[(b * channels + c) * plane + i] * r.weights[b * plane + i];
      }
    }
  }
  return r;
}

SpatialAttentionGrad spatial_attention_backward(const Tensor& f, const SpatialAttentionParams& params,
                                                const SpatialAttentionResult& fwd, const Tensor& grad_out) {
  const int64_t batch = f.dim(0), channels = f.dim(1), plane = f.dim(2) * f.dim(3);
  SpatialAttentionGrad g{Tensor(f.shape()), Tensor(params.conv_weight.shape()), Tensor({1}), Tensor({1}), Tensor({1})};
  Tensor grad_bn(fwd.bn_out.shape());
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t i = 0; i < plane; ++i) {
      const double w = fwd.weights[b * plane + i];
      double dw = 0.0;
      for (int64_t c = 0; c < channels; ++c) {
        const int64_t k = (b * channels + c) * plane + i;
        dw += grad_out[k] * f[k];
        g.input[k] = grad_out[k] * w;
      }
      const double dz = dw * w * (1.0 - w);
      grad_bn[b * plane + i] = (!params.relu || fwd.bn_out[b * plane + i] > 0) ? dz : 0.0;
    }
  }
  const Tensor grad_conv = ops::batchnorm_backward(fwd.bn_cache, params.bn, grad_bn, g.bn_gamma, g.bn_beta);
  const Tensor grad_cat = ops::conv2d_backward(fwd.pools.p_cat, params.conv_weight, same_padding(params.kernel),
                                               grad_conv, g.conv_weight, g.conv_bias);
  const double inv_c = 1.0 / static_cast<double>(channels);
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t i = 0; i < plane; ++i) {
      const double d_avg = grad_cat[(b * 2) * plane + i] * inv_c;
      const double d_max = grad_cat[(b * 2 + 1) * plane + i];
      for (int64_t c = 0; c < channels; ++c) g.input[(b * channels + c) * plane + i] += d_avg;
      g.input[(b * channels + fwd.pools.argmax_channel[static_cast<size_t>(b * plane + i)]) * plane + i] += d_max;
    }
  }
  return g;
}

CshaResult csha_forward(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp, Mode mode) {
  CshaResult r;
  r.channel = channel_attention(f, cp);
  r.spatial = spatial_attention(r.channel.output, sp, mode);
  return r;
}

CshaGrad csha_backward(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp,
                       const CshaResult& fwd, const Tensor& grad_out) {
  CshaGrad g;
  g.spatial = spatial_attention_backward(fwd.channel.output, sp, fwd.spatial, grad_out);
  g.channel = channel_attention_backward(f, cp, fwd.channel, g.spatial.input);
  g.input = g.channel.input;
  return g;
}

CshaBlock::CshaBlock(int64_t channels, const CshaOptions& options, std::mt19937_64& rng)
    : options_(options), channels_(channels) {
  const int64_t hidden = ChannelAttentionParams::hidden_width(channels, options.reduction);
  if (options.kernel < 1 || options.kernel % 2 == 0) throw ConfigError("CSHA kernel size must be odd");
  w1_ = Param({channels, hidden});
  w2_ = Param({hidden, channels});
  conv_weight_ = Param({1, 2, options.kernel, options.kernel});
  conv_bias_ = Param({1});
  gamma_ = Param({1});
  beta_ = Param({1});
  kaiming_init(w1_.value, channels, rng);
  kaiming_init(w2_.value, hidden, rng, 1.0);
  kaiming_init(conv_weight_.value, 2 * options.kernel * options.kernel, rng, 1.0);
  gamma_.value.fill(1.0);
  running_mean_ = Tensor({1}, 0.0);
  running_var_ = Tensor({1}, 1.0);
}

ChannelAttentionParams CshaBlock::channel_params() const {
  return {channels_, options_.reduction, w1_.value, w2_.value};
}

SpatialAttentionParams CshaBlock::spatial_params() const {
  SpatialAttentionParams p;
  p.kernel = options_.kernel;
  p.conv_weight = conv_weight_.value;
  p.conv_bias = conv_bias_.value;
  p.bn.gamma = gamma_.value;
  p.bn.beta = beta_.value;
  p.bn.running_mean = running_mean_;
  p.bn.running_var = running_var_;
  p.relu = options_.relu;
  return p;
}

Tensor CshaBlock::forward(const Tensor& x, Mode mode) {
  input_ = x;
  Tensor h = x;
  if (options_.channel) {
    channel_ = channel_attention(h, channel_params());
    h = channel_.output;
  }
  if (options_.spatial) {
    const SpatialAttentionParams sp = spatial_params();
    spatial_ = spatial_attention(h, sp, mode);
    if (mode == Mode::train) {
      ops::BatchNormState state = sp.bn;
      ops::batchnorm_update_running(state, spatial_.bn_cache, h.dim(0) * h.dim(2) * h.dim(3));
      running_mean_ = state.running_mean;
      running_var_ = state.running_var;
    }
    h = spatial_.output;
  }
  return h;
}

Tensor CshaBlock::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  if (options_.spatial) {
    const Tensor& spatial_in = options_.channel ? channel_.output : input_;
    SpatialAttentionGrad sg = spatial_attention_backward(spatial_in, spatial_params(), spatial_, g);
    conv_weight_.grad += sg.conv_weight;
    conv_bias_.grad += sg.conv_bias;
    gamma_.grad += sg.bn_gamma;
    beta_.grad += sg.bn_beta;
    g = std::move(sg.input);
  }
  if (options_.channel) {
    ChannelAttentionGrad cg = channel_attention_backward(input_, channel_params(), channel_, g);
    w1_.grad += cg.w1;
    w2_.grad += cg.w2;
    g = std::move(cg.input);
  }
  return g;
}

void CshaBlock::register_params(ParamRegistry& registry, const std::string& prefix) {
  if (options_.channel) {
    registry.add(prefix + "channel.w1", w1_);
    registry.add(prefix + "channel.w2", w2_);
  }
  if (options_.spatial) {
    registry.add(prefix + "spatial.conv_weight", conv_weight_);
    registry.add(prefix + "spatial.conv_bias", conv_bias_);
    registry.add(prefix + "spatial.bn_gamma", gamma_);
    registry.add(prefix + "spatial.bn_beta", beta_);
    registry.add_buffer(prefix + "spatial.running_mean", running_mean_);
    registry.add_buffer(prefix + "spatial.running_var", running_var_);
  }
}

}  // namespace vageo
