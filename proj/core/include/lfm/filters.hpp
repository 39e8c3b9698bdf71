#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lfm/tensor.hpp"

namespace lfm {

enum class Normalization {
  unnormalized_eq2,  ///< raw Gaussian density values at integer offsets
  unit_sum,          ///< taps divided by their sum (unit DC gain)
};

enum class PaddingMode { zero, reflect, circular };

std::string_view to_string(Normalization n);
std::string_view to_string(PaddingMode p);
Normalization parse_normalization(std::string_view s);
PaddingMode parse_padding(std::string_view s);

/// Odd-sized square filter, taps row-major with the center at (m/2, m/2).
class Kernel {
 public:
  /// Arbitrary odd-sized kernel; taps.size() must equal m*m.
  Kernel(std::size_t m, std::vector<double> taps, Normalization normalization, double sigma = 0.0);

  std::size_t m() const noexcept { return m_; }
  std::size_t radius() const noexcept { return m_ / 2; }
  double sigma() const noexcept { return sigma_; }
  Normalization normalization() const noexcept { return normalization_; }
  std::span<const double> taps() const noexcept { return taps_; }

  /// Tap at offset (dy, dx), both in [-radius, radius].
  double at(long dy, long dx) const {
    const long r = static_cast<long>(radius());
    return taps_[static_cast<std::size_t>((dy + r) * static_cast<long>(m_) + (dx + r))];
  }

  double sum() const;

  /// 1D factor g with taps(y, x) = g[y] * g[x], present only for Gaussian kernels.
  const std::vector<double>& separable_factor() const noexcept { return factor_; }
  bool separable() const noexcept { return !factor_.empty(); }

  /// Single 1 at the center.
  static Kernel identity(std::size_t m);

 private:
  friend Kernel gaussian_kernel(std::size_t m, Normalization normalization);

  std::size_t m_;
  std::vector<double> taps_;
  Normalization normalization_;
  double sigma_;
  std::vector<double> factor_;
};

/// Discrete Gaussian G(x,y) = exp(-(x^2+y^2) / (2 s^2)) / (2 pi s^2) with
/// s = floor(m/2), sampled at integer offsets |x|, |y| <= floor(m/2).
Kernel gaussian_kernel(std::size_t m, Normalization normalization = Normalization::unit_sum);

/// Map a possibly out-of-range coordinate into [0, n) per padding mode.
/// Returns -1 when the coordinate reads from zero padding.
long resolve_index(long i, long n, PaddingMode padding);

/// Output extent for an input extent and stride: ceil(n / stride).
constexpr std::size_t strided_extent(std::size_t n, std::size_t stride) {
  return (n + stride - 1) / stride;
}

/// Throws unless the kernel/padding/stride combination is admissible for an
/// H x W plane.
void check_convolution_args(std::size_t height, std::size_t width, const Kernel& kernel,
                            PaddingMode padding, std::size_t stride);

/// Plane-level correlation: out(i, j) = sum k(dy,dx) in(i*s + dy, j*s + dx).
/// out must hold ceil(H/s) * ceil(W/s) values.
template <typename T>
void correlate_plane(std::span<const T> in, std::size_t height, std::size_t width,
                     const Kernel& kernel, PaddingMode padding, std::size_t stride,
                     std::span<T> out);

/// Adjoint of correlate_plane: scatters grad_out back through the same taps
/// into grad_in (H x W), which is overwritten.
template <typename T>
void correlate_plane_adjoint(std::span<const T> grad_out, std::size_t height, std::size_t width,
                             const Kernel& kernel, PaddingMode padding, std::size_t stride,
                             std::span<T> grad_in);

/// Correlation of image with kernel (== convolution for symmetric kernels),
/// output ceil(H/stride) x ceil(W/stride) sampled at (i*stride, j*stride).
Image convolve2d(const Image& image, const Kernel& kernel, PaddingMode padding,
                 std::size_t stride = 1);

/// Row pass then column pass with the kernel's 1D factor. Requires a separable kernel.
Image convolve2d_separable(const Image& image, const Kernel& kernel, PaddingMode padding,
                           std::size_t stride = 1);

Image lowpass(const Image& image, std::size_t m = 3, PaddingMode padding = PaddingMode::reflect,
              Normalization normalization = Normalization::unit_sum);

/// image - lowpass(image).
Image highpass(const Image& image, std::size_t m = 3, PaddingMode padding = PaddingMode::reflect,
               Normalization normalization = Normalization::unit_sum);

/// Sum of absolute horizontal and vertical neighbour differences, with wraparound.
double total_variation_circular(const Image& image);

Image circular_shift(const Image& image, long dy, long dx);

}  // namespace lfm
