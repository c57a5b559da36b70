#pragma once

#include <cmath>
#include <vector>

#include "vageo/tensor.hpp"

// Functional building blocks with explicit backward passes. Every backward
// accumulates (+=) into parameter gradients and returns/overwrites the input
// gradient.
namespace vageo::ops {

enum class Mode { train, eval };

struct Conv2dGeometry {
  int64_t stride = 1;
  int64_t padding = 0;
};

int64_t conv_output_size(int64_t in, int64_t kernel, const Conv2dGeometry& g);

// x: B x Cin x H x W, weight: Cout x Cin x k x k, bias: Cout or empty.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g);

// Returns dL/dx; adds dL/dweight and dL/dbias into the given accumulators
// (grad_bias may be empty when the convolution has no bias).
Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Conv2dGeometry& g, const Tensor& grad_out,
                       Tensor& grad_weight, Tensor& grad_bias);

struct BatchNormState {
  Tensor gamma;         // C
  Tensor beta;          // C
  Tensor running_mean;  // C
  Tensor running_var;   // C
  double momentum = 0.1;
  double eps = 1e-5;
};

struct BatchNormCache {
  Tensor normalized;           // x_hat, same shape as input
  std::vector<double> invstd;  // per channel
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased
  Mode mode = Mode::eval;
};

Tensor batchnorm(const Tensor& x, const BatchNormState& state, Mode mode, BatchNormCache& cache);

// Moves running statistics toward the batch statistics held in `cache`
// (unbiased variance, as is customary for running estimates).
void batchnorm_update_running(BatchNormState& state, const BatchNormCache& cache, int64_t count_per_channel);

Tensor batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state, const Tensor& grad_out,
                          Tensor& grad_gamma, Tensor& grad_beta);

struct MaxPoolCache {
  std::vector<int64_t> argmax;  // flat input index per output element
  Shape input_shape;
};

Tensor max_pool2d(const Tensor& x, int64_t kernel, const Conv2dGeometry& g, MaxPoolCache& cache);
Tensor max_pool2d_backward(const MaxPoolCache& cache, const Tensor& grad_out);

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// log(1 + exp(z)) without overflow.
double softplus(double z);

// B x C x H x W -> B x C (spatial mean).
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out);

}  // namespace vageo::ops
