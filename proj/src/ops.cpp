#include "vageo/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vageo/error.hpp"

namespace vageo::ops {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvDims {
  int64_t batch, in_channels, height, width;
  int64_t out_channels, kernel, out_height, out_width;
  int64_t patch() const { return in_channels * kernel * kernel; }
  int64_t positions() const { return out_height * out_width; }
  bool pointwise(const Conv2dGeometry& g) const { return kernel == 1 && g.stride == 1 && g.padding == 0; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& weight, const Conv2dGeometry& g) {
  if (x.rank() != 4 || weight.rank() != 4) throw ShapeError("conv2d expects rank-4 input and weight");
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  }
  if (weight.dim(2) != weight.dim(3)) throw ShapeError("conv2d: only square kernels are supported");
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), 0, 0};
  d.out_height = conv_output_size(d.height, d.kernel, g);
  d.out_width = conv_output_size(d.width, d.kernel, g);
  return d;
}

// Unrolls one image (Cin x H x W) into a (Cin*k*k) x (Hout*Wout) matrix.
void im2col(const double* img, const ConvDims& d, const Conv2dGeometry& g, double* col) {
  const int64_t positions = d.positions();
  for (int64_t c = 0; c < d.in_channels; ++c) {
    const double* plane = img + c * d.height * d.width;
    for (int64_t ky = 0; ky < d.kernel; ++ky) {
      for (int64_t kx = 0; kx < d.kernel; ++kx) {
        double* row = col + ((c * d.kernel + ky) * d.kernel + kx) * positions;
        for (int64_t oy = 0; oy < d.out_height; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + ky;
          double* dst = row + oy * d.out_width;
          if (iy < 0 || iy >= d.height) {
            std::fill_n(dst, d.out_width, 0.0);
            continue;
          }
          const double* src = plane + iy * d.width;
          for (int64_t ox = 0; ox < d.out_width; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + kx;
            dst[ox] = (ix >= 0 && ix < d.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, const ConvDims& d, const Conv2dGeometry& g, double* img) {
  const int64_t positions = d.positions();
  for (int64_t c = 0; c < d.in_channels; ++c) {
    double* plane = img + c * d.height * d.width;
    for (int64_t ky = 0; ky < d.kernel; ++ky) {
      for (int64_t kx = 0; kx < d.kernel; ++kx) {
        const double* row = col + ((c * d.kernel + ky) * d.kernel + kx) * positions;
        for (int64_t oy = 0; oy < d.out_height; ++oy) {
          const int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= d.height) continue;
          const double* src = row + oy * d.out_width;
          double* dst = plane + iy * d.width;
          for (int64_t ox = 0; ox < d.out_width; ++ox) {
            const int64_t ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < d.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

int64_t conv_output_size(int64_t in, int64_t kernel, const Conv2dGeometry& g) {
  if (g.stride < 1) throw ConfigError("conv stride must be >= 1");
  const int64_t span = in + 2 * g.padding - kernel;
  if (span < 0) throw ShapeError("conv2d: kernel larger than padded input");
  return span / g.stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dGeometry& g) {
  const ConvDims d = conv_dims(x, weight, g);
  if (!bias.empty() && static_cast<int64_t>(bias.size()) != d.out_channels) {
    throw ShapeError("conv2d: bias size does not match output channels");
  }
  Tensor out({d.batch, d.out_channels, d.out_height, d.out_width});
  ConstMatMap w(weight.data(), d.out_channels, d.patch());
  std::vector<double> col;
  if (!d.pointwise(g)) col.resize(static_cast<size_t>(d.patch() * d.positions()));
  for (int64_t n = 0; n < d.batch; ++n) {
    const double* img = x.data() + n * d.in_channels * d.height * d.width;
    const double* col_ptr = img;
    if (!d.pointwise(g)) {
      im2col(img, d, g, col.data());
      col_ptr = col.data();
    }
    MatMap y(out.data() + n * d.out_channels * d.positions(), d.out_channels, d.positions());
    y.noalias() = w * ConstMatMap(col_ptr, d.patch(), d.positions());
    if (!bias.empty()) {
      for (int64_t c = 0; c < d.out_channels; ++c) y.row(c).array() += bias[static_cast<size_t>(c)];
    }
  }
  return out;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& weight, const Conv2dGeometry& g, const Tensor& grad_out,
                       Tensor& grad_weight, Tensor& grad_bias) {
  const ConvDims d = conv_dims(x, weight, g);
  if (grad_out.shape() != Shape{d.batch, d.out_channels, d.out_height, d.out_width}) {
    throw ShapeError("conv2d_backward: gradient shape " + shape_string(grad_out.shape()) + " is wrong");
  }
  Tensor grad_x = Tensor::zeros_like(x);
  ConstMatMap w(weight.data(), d.out_channels, d.patch());
  MatMap gw(grad_weight.data(), d.out_channels, d.patch());
  std::vector<double> col, grad_col;
  if (!d.pointwise(g)) {
    col.resize(static_cast<size_t>(d.patch() * d.positions()));
    grad_col.resize(col.size());
  }
  for (int64_t n = 0; n < d.batch; ++n) {
    const double* img = x.data() + n * d.in_channels * d.height * d.width;
    ConstMatMap gy(grad_out.data() + n * d.out_channels * d.positions(), d.out_channels, d.positions());
    if (!grad_bias.empty()) {
      for (int64_t c = 0; c < d.out_channels; ++c) grad_bias[static_cast<size_t>(c)] += gy.row(c).sum();
    }
    double* gimg = grad_x.data() + n * d.in_channels * d.height * d.width;
    if (d.pointwise(g)) {
      gw.noalias() += gy * ConstMatMap(img, d.patch(), d.positions()).transpose();
      MatMap(gimg, d.patch(), d.positions()).noalias() = w.transpose() * gy;
    } else {
      im2col(img, d, g, col.data());
      gw.noalias() += gy * ConstMatMap(col.data(), d.patch(), d.positions()).transpose();
      MatMap(grad_col.data(), d.patch(), d.positions()).noalias() = w.transpose() * gy;
      col2im(grad_col.data(), d, g, gimg);
    }
  }
  return grad_x;
}

Tensor batchnorm(const Tensor& x, const BatchNormState& state, Mode mode, BatchNormCache& cache) {
  if (x.rank() != 4 || static_cast<int64_t>(state.gamma.size()) != x.dim(1)) {
    throw ShapeError("batchnorm: channel mismatch for input " + shape_string(x.shape()));
  }
  const int64_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
  const double count = static_cast<double>(batch * plane);
  cache.mode = mode;
  cache.invstd.assign(static_cast<size_t>(channels), 0.0);
  cache.batch_mean.assign(static_cast<size_t>(channels), 0.0);
  cache.batch_var.assign(static_cast<size_t>(channels), 0.0);
  cache.normalized = Tensor(x.shape());
  Tensor out(x.shape());
  for (int64_t c = 0; c < channels; ++c) {
    const auto ci = static_cast<size_t>(c);
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels + c) * plane;
        for (int64_t i = 0; i < plane; ++i) s += p[i];
      }
      mean = s / count;
      double sq = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels + c) * plane;
        for (int64_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
    } else {
      mean = state.running_mean[ci];
      var = state.running_var[ci];
    }
    const double invstd = 1.0 / std::sqrt(var + state.eps);
    cache.batch_mean[ci] = mean;
    cache.batch_var[ci] = var;
    cache.invstd[ci] = invstd;
    const double gamma = state.gamma[ci], beta = state.beta[ci];
    for (int64_t n = 0; n < batch; ++n) {
      const int64_t off = (n * channels + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        const double xh = (x[static_cast<size_t>(off + i)] - mean) * invstd;
        cache.normalized[static_cast<size_t>(off + i)] = xh;
        out[static_cast<size_t>(off + i)] = gamma * xh + beta;
      }
    }
  }
  return out;
}

void batchnorm_update_running(BatchNormState& state, const BatchNormCache& cache, int64_t count_per_channel) {
  const double m = state.momentum;
  const double correction =
      count_per_channel > 1 ? static_cast<double>(count_per_channel) / static_cast<double>(count_per_channel - 1)
                            : 1.0;
  for (size_t c = 0; c < state.running_mean.size(); ++c) {
    state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * cache.batch_mean[c];
    state.running_var[c] = (1.0 - m) * state.running_var[c] + m * cache.batch_var[c] * correction;
  }
}

Tensor batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state, const Tensor& grad_out,
                          Tensor& grad_gamma, Tensor& grad_beta) {
  const Tensor& xh = cache.normalized;
  if (grad_out.shape() != xh.shape()) throw ShapeError("batchnorm_backward: gradient shape mismatch");
  const int64_t batch = xh.dim(0), channels = xh.dim(1), plane = xh.dim(2) * xh.dim(3);
  const double count = static_cast<double>(batch * plane);
  Tensor grad_x(xh.shape());
  for (int64_t c = 0; c < channels; ++c) {
    const auto ci = static_cast<size_t>(c);
    double sum_g = 0.0, sum_gx = 0.0;
    for (int64_t n = 0; n < batch; ++n) {
      const int64_t off = (n * channels + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        const auto k = static_cast<size_t>(off + i);
        sum_g += grad_out[k];
        sum_gx += grad_out[k] * xh[k];
      }
    }
    grad_gamma[ci] += sum_gx;
    grad_beta[ci] += sum_g;
    const double scale = state.gamma[ci] * cache.invstd[ci];
    for (int64_t n = 0; n < batch; ++n) {
      const int64_t off = (n * channels + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        const auto k = static_cast<size_t>(off + i);
        if (cache.mode == Mode::train) {
          grad_x[k] = scale * (grad_out[k] - sum_g / count - xh[k] * sum_gx / count);
        } else {
          grad_x[k] = scale * grad_out[k];
        }
      }
    }
  }
  return grad_x;
}

Tensor max_pool2d(const Tensor& x, int64_t kernel, const Conv2dGeometry& g, MaxPoolCache& cache) {
  if (x.rank() != 4) throw ShapeError("max_pool2d expects a rank-4 input");
  const int64_t batch = x.dim(0), channels = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t oh = conv_output_size(h, kernel, g), ow = conv_output_size(w, kernel, g);
  Tensor out({batch, channels, oh, ow});
  cache.input_shape = x.shape();
  cache.argmax.assign(out.size(), 0);
  size_t o = 0;
  for (int64_t p = 0; p < batch * channels; ++p) {
    const int64_t base = p * h * w;
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        int64_t best_idx = -1;
        for (int64_t ky = 0; ky < kernel; ++ky) {
          const int64_t iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= h) continue;
          for (int64_t kx = 0; kx < kernel; ++kx) {
            const int64_t ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= w) continue;
            const int64_t idx = base + iy * w + ix;
            if (x[static_cast<size_t>(idx)] > best) {
              best = x[static_cast<size_t>(idx)];
              best_idx = idx;
            }
          }
        }
        out[o] = best;
        cache.argmax[o] = best_idx;
      }
    }
  }
  return out;
}

Tensor max_pool2d_backward(const MaxPoolCache& cache, const Tensor& grad_out) {
  Tensor grad_x(cache.input_shape);
  for (size_t o = 0; o < grad_out.size(); ++o) grad_x[static_cast<size_t>(cache.argmax[o])] += grad_out[o];
  return grad_x;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool expects a rank-4 input");
  const int64_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out({batch, channels});
  for (int64_t p = 0; p < batch * channels; ++p) {
    double s = 0.0;
    const double* src = x.data() + p * plane;
    for (int64_t i = 0; i < plane; ++i) s += src[i];
    out[static_cast<size_t>(p)] = s / static_cast<double>(plane);
  }
  return out;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out) {
  Tensor grad_x(input_shape);
  const int64_t plane = input_shape[2] * input_shape[3];
  for (int64_t p = 0; p < input_shape[0] * input_shape[1]; ++p) {
    const double g = grad_out[static_cast<size_t>(p)] / static_cast<double>(plane);
    std::fill_n(grad_x.data() + p * plane, plane, g);
  }
  return grad_x;
}

}  // namespace vageo::ops
