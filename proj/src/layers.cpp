#include "vageo/layers.hpp"

#include <cmath>

#include "vageo/error.hpp"

namespace vageo {

void kaiming_init(Tensor& weight, int64_t fan_in, std::mt19937_64& rng, double gain) {
  std::normal_distribution<double> normal(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
  for (auto& v : weight.values()) v = normal(rng);
}

Conv2d::Conv2d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride, int64_t padding, bool bias,
               std::mt19937_64& rng)
    : weight_({out_channels, in_channels, kernel, kernel}), geometry_{stride, padding}, kernel_(kernel) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) throw ConfigError("Conv2d: dimensions must be positive");
  kaiming_init(weight_.value, in_channels * kernel * kernel, rng);
  if (bias) bias_ = Param({out_channels});
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  input_ = x;
  return ops::conv2d(x, weight_.value, bias_.value, geometry_);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  return ops::conv2d_backward(input_, weight_.value, geometry_, grad_out, weight_.grad, bias_.grad);
}

void Conv2d::register_params(ParamRegistry& registry, const std::string& prefix) {
  registry.add(prefix + "weight", weight_);
  if (has_bias()) registry.add(prefix + "bias", bias_);
}

Shape Conv2d::output_shape(const Shape& input) const {
  return {input[0], weight_.value.dim(0), ops::conv_output_size(input[2], kernel_, geometry_),
          ops::conv_output_size(input[3], kernel_, geometry_)};
}

BatchNorm2d::BatchNorm2d(int64_t channels) : gamma_({channels}), beta_({channels}) {
  gamma_.value.fill(1.0);
  state_.running_mean = Tensor({channels}, 0.0);
  state_.running_var = Tensor({channels}, 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  state_.gamma = gamma_.value;
  state_.beta = beta_.value;
  Tensor y = ops::batchnorm(x, state_, mode, cache_);
  if (mode == Mode::train) ops::batchnorm_update_running(state_, cache_, x.dim(0) * x.dim(2) * x.dim(3));
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  return ops::batchnorm_backward(cache_, state_, grad_out, gamma_.grad, beta_.grad);
}

void BatchNorm2d::register_params(ParamRegistry& registry, const std::string& prefix) {
  registry.add(prefix + "gamma", gamma_);
  registry.add(prefix + "beta", beta_);
  registry.add_buffer(prefix + "running_mean", state_.running_mean);
  registry.add_buffer(prefix + "running_var", state_.running_var);
}

Tensor Activate::forward(const Tensor& x, Mode) {
  input_ = x;
  Tensor y(x.shape());
  const double slope = kind_ == Activation::relu ? 0.0 : slope_;
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
  return y;
}

Tensor Activate::backward(const Tensor& grad_out) {
  Tensor g(grad_out.shape());
  const double slope = kind_ == Activation::relu ? 0.0 : slope_;
  for (size_t i = 0; i < g.size(); ++i) g[i] = input_[i] > 0 ? grad_out[i] : slope * grad_out[i];
  return g;
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) { return ops::max_pool2d(x, kernel_, geometry_, cache_); }

Tensor MaxPool2d::backward(const Tensor& grad_out) { return ops::max_pool2d_backward(cache_, grad_out); }

Shape MaxPool2d::output_shape(const Shape& input) const {
  return {input[0], input[1], ops::conv_output_size(input[2], kernel_, geometry_),
          ops::conv_output_size(input[3], kernel_, geometry_)};
}

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::register_params(ParamRegistry& registry, const std::string& prefix) {
  for (size_t i = 0; i < layers_.size(); ++i) layers_[i]->register_params(registry, prefix + std::to_string(i) + ".");
}

Shape Sequential::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  return s;
}

Residual::Residual(std::unique_ptr<Sequential> main, std::unique_ptr<Sequential> shortcut,
                   std::unique_ptr<Activate> post_activation)
    : main_(std::move(main)), shortcut_(std::move(shortcut)), post_(std::move(post_activation)) {}

Tensor Residual::forward(const Tensor& x, Mode mode) {
  Tensor y = main_->forward(x, mode);
  Tensor skip = shortcut_ ? shortcut_->forward(x, mode) : x;
  if (y.shape() != skip.shape()) {
    throw ShapeError("residual branch shapes differ: " + shape_string(y.shape()) + " vs " +
                     shape_string(skip.shape()));
  }
  y += skip;
  return post_ ? post_->forward(y, mode) : y;
}

Tensor Residual::backward(const Tensor& grad_out) {
  Tensor g = post_ ? post_->backward(grad_out) : grad_out;
  Tensor gx = main_->backward(g);
  gx += shortcut_ ? shortcut_->backward(g) : g;
  return gx;
}

void Residual::register_params(ParamRegistry& registry, const std::string& prefix) {
  main_->register_params(registry, prefix + "main.");
  if (shortcut_) shortcut_->register_params(registry, prefix + "shortcut.");
}

std::unique_ptr<Sequential> conv_bn_act(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
                                        Activation act, std::mt19937_64& rng) {
  auto seq = std::make_unique<Sequential>();
  seq->emplace<Conv2d>(in_channels, out_channels, kernel, stride, kernel / 2, false, rng);
  seq->emplace<BatchNorm2d>(out_channels);
  seq->emplace<Activate>(act);
  return seq;
}

}  // namespace vageo
