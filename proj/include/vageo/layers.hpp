#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vageo/ops.hpp"
#include "vageo/tensor.hpp"

namespace vageo {

using ops::Mode;

struct Param {
  Tensor value;
  Tensor grad;

  Param() = default;
  explicit Param(Shape shape) : value(shape), grad(shape) {}
};

struct NamedParam {
  std::string name;
  Param* param;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

struct ParamRegistry {
  std::vector<NamedParam> params;
  std::vector<NamedBuffer> buffers;

  void add(std::string name, Param& p) { params.push_back({std::move(name), &p}); }
  void add_buffer(std::string name, Tensor& t) { buffers.push_back({std::move(name), &t}); }
};

// A differentiable stage. forward() caches what backward() needs, so a layer
// serves one forward/backward pair at a time.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void register_params(ParamRegistry& registry, const std::string& prefix) { (void)registry, (void)prefix; }
  virtual Shape output_shape(const Shape& input) const = 0;
};

void kaiming_init(Tensor& weight, int64_t fan_in, std::mt19937_64& rng, double gain = 2.0);

class Conv2d : public Layer {
 public:
  Conv2d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride, int64_t padding, bool bias,
         std::mt19937_64& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void register_params(ParamRegistry& registry, const std::string& prefix) override;
  Shape output_shape(const Shape& input) const override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  bool has_bias() const { return !bias_.value.empty(); }

 private:
  Param weight_;
  Param bias_;
  ops::Conv2dGeometry geometry_;
  int64_t kernel_;
  Tensor input_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int64_t channels);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void register_params(ParamRegistry& registry, const std::string& prefix) override;
  Shape output_shape(const Shape& input) const override { return input; }

 private:
  Param gamma_;
  Param beta_;
  ops::BatchNormState state_;
  ops::BatchNormCache cache_;
};

enum class Activation { relu, leaky_relu };

class Activate : public Layer {
 public:
  explicit Activate(Activation kind, double negative_slope = 0.1) : kind_(kind), slope_(negative_slope) {}

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const override { return input; }

 private:
  Activation kind_;
  double slope_;
  Tensor input_;
};

class MaxPool2d : public Layer {
 public:
  MaxPool2d(int64_t kernel, int64_t stride, int64_t padding) : kernel_(kernel), geometry_{stride, padding} {}

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& input) const override;

 private:
  int64_t kernel_;
  ops::Conv2dGeometry geometry_;
  ops::MaxPoolCache cache_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;

  Sequential& add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void register_params(ParamRegistry& registry, const std::string& prefix) override;
  Shape output_shape(const Shape& input) const override;
  size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// y = post(main(x) + shortcut(x)); an empty shortcut is the identity and
// post_activation is optional (ResNet applies it, DarkNet does not).
class Residual : public Layer {
 public:
  Residual(std::unique_ptr<Sequential> main, std::unique_ptr<Sequential> shortcut,
           std::unique_ptr<Activate> post_activation);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void register_params(ParamRegistry& registry, const std::string& prefix) override;
  Shape output_shape(const Shape& input) const override { return main_->output_shape(input); }

 private:
  std::unique_ptr<Sequential> main_;
  std::unique_ptr<Sequential> shortcut_;
  std::unique_ptr<Activate> post_;
};

// conv (no bias) -> batchnorm -> activation
std::unique_ptr<Sequential> conv_bn_act(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
                                        Activation act, std::mt19937_64& rng);

}  // namespace vageo
