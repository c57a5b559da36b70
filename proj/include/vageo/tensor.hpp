#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vageo {

using Shape = std::vector<int64_t>;

std::string shape_string(const Shape& shape);

// Dense row-major float64 tensor. Rank-4 tensors follow (batch, channels,
// height, width) ordering.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  size_t rank() const noexcept { return shape_.size(); }
  int64_t dim(size_t axis) const { return shape_.at(axis); }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](size_t i) noexcept { return data_[i]; }
  double operator[](size_t i) const noexcept { return data_[i]; }

  double& at(int64_t b, int64_t c, int64_t h, int64_t w) noexcept {
    return data_[static_cast<size_t>(((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  double at(int64_t b, int64_t c, int64_t h, int64_t w) const noexcept {
    return data_[static_cast<size_t>(((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  void fill(double v);
  Tensor reshaped(Shape shape) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }

 private:
  Shape shape_;
  std::vector<double> data_;
};

int64_t numel(const Shape& shape);

// Concatenates rank-4 tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Splits a rank-4 tensor after `channels_first` channels. Inverse of concat_channels.
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int64_t channels_first);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace vageo
