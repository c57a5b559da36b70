#include "vageo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vageo/error.hpp"

namespace vageo {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (static_cast<int64_t>(data_.size()) != numel(shape_)) {
    throw ShapeError("value count " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("shape mismatch in +=: " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const int64_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
  Tensor out({batch, ca + cb, a.dim(2), a.dim(3)});
  for (int64_t n = 0; n < batch; ++n) {
    std::copy_n(a.data() + n * ca * plane, ca * plane, out.data() + n * (ca + cb) * plane);
    std::copy_n(b.data() + n * cb * plane, cb * plane, out.data() + (n * (ca + cb) + ca) * plane);
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int64_t channels_first) {
  if (t.rank() != 4 || channels_first < 0 || channels_first > t.dim(1)) {
    throw ShapeError("split_channels: bad split of " + shape_string(t.shape()));
  }
  const int64_t batch = t.dim(0), c = t.dim(1), plane = t.dim(2) * t.dim(3);
  const int64_t cb = c - channels_first;
  Tensor a({batch, channels_first, t.dim(2), t.dim(3)});
  Tensor b({batch, cb, t.dim(2), t.dim(3)});
  for (int64_t n = 0; n < batch; ++n) {
    std::copy_n(t.data() + n * c * plane, channels_first * plane, a.data() + n * channels_first * plane);
    std::copy_n(t.data() + (n * c + channels_first) * plane, cb * plane, b.data() + n * cb * plane);
  }
  return {std::move(a), std::move(b)};
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace vageo
