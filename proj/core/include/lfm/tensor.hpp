#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfm/error.hpp"

namespace lfm {

/// Single-channel real image, row-major, indexed (row, col).
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width, fill) {}
  Image(std::size_t height, std::size_t width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) {
      throw DimensionError("image data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(height_) + "x" +
                           std::to_string(width_));
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Alternating +amplitude/-amplitude pattern, the highest representable
/// spatial frequency. Pixel (0, 0) is +amplitude.
Image nyquist_checkerboard(std::size_t height, std::size_t width, double amplitude = 1.0);

double sum_of_squares(const Image& image);
double mean(const Image& image);

/// Dense real array of arbitrary rank, row-major. Feature maps use rank 4
/// (batch, channels, height, width).
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> shape, T fill = T{0})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  BasicTensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }

  static std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  // rank-4 accessors
  std::size_t n() const { return dim(0); }
  std::size_t c() const { return dim(1); }
  std::size_t h() const { return dim(2); }
  std::size_t w() const { return dim(3); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  /// Contiguous H*W plane for (n, c) of a rank-4 tensor.
  std::span<T> plane(std::size_t n, std::size_t c) {
    const std::size_t hw = shape_[2] * shape_[3];
    return std::span<T>(data_).subspan((n * shape_[1] + c) * hw, hw);
  }
  std::span<const T> plane(std::size_t n, std::size_t c) const {
    const std::size_t hw = shape_[2] * shape_[3];
    return std::span<const T>(data_).subspan((n * shape_[1] + c) * hw, hw);
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

/// Throws DimensionError unless t has rank 4.
template <typename T>
void require_rank4(const BasicTensor<T>& t, const char* what) {
  if (t.rank() != 4) {
    throw DimensionError(std::string(what) + ": expected rank-4 tensor, got shape " +
                         BasicTensor<T>::shape_string(t.shape()));
  }
}

/// Stack equally sized images into an (N, 1, H, W) tensor.
Tensor stack_images(std::span<const Image> images);

}  // namespace lfm
