#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "lfm/filters.hpp"
#include "lfm/tensor.hpp"

namespace lfm {

/// H x W complex frequency-domain array, row-major, F(u, v) at data[u * W + v].
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(std::size_t height, std::size_t width)
      : height_(height), width_(width), data_(height * width) {}
  ComplexField(std::size_t height, std::size_t width, std::vector<std::complex<double>> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  std::complex<double>& operator()(std::size_t u, std::size_t v) { return data_[u * width_ + v]; }
  const std::complex<double>& operator()(std::size_t u, std::size_t v) const {
    return data_[u * width_ + v];
  }

  std::vector<std::complex<double>>& data() noexcept { return data_; }
  const std::vector<std::complex<double>>& data() const noexcept { return data_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::complex<double>> data_;
};

enum class TransformPath {
  automatic,  ///< radix-2 when both sides are powers of two, else reference
  reference,  ///< direct summation of the definition
  radix2,     ///< iterative Cooley-Tukey; requires power-of-two sides
};

bool is_power_of_two(std::size_t n) noexcept;

/// F(u,v) = sum_{a,b} x(a,b) exp(-2 pi i (ua/H + vb/W)).
ComplexField dft2(const Image& image, TransformPath path = TransformPath::automatic);

/// Forward transform of a complex field (used for round trips on arbitrary spectra).
ComplexField dft2(const ComplexField& field, TransformPath path = TransformPath::automatic);

struct InverseResult {
  Image image;
  double max_imag_residual = 0.0;  ///< max |Im| of the inverse, ~0 for conjugate-symmetric input
};

/// Inverse transform with 1/(HW) normalization; returns the real part.
InverseResult idft2(const ComplexField& field, TransformPath path = TransformPath::automatic);

/// Kernel embedded in an H x W zero array with the center tap at (0, 0) and
/// the remaining taps wrapped circularly.
Image embed_kernel(const Kernel& kernel, std::size_t height, std::size_t width);

/// Circular convolution through the convolution theorem:
/// idft2(dft2(image) * dft2(embedded kernel)).
Image filter_spectral(const Image& image, const Kernel& kernel,
                      TransformPath path = TransformPath::automatic);

struct BandEnergy {
  double lo = 0.0;  ///< inclusive radial frequency bound, cycles/sample
  double hi = 0.0;  ///< exclusive, except the last band which includes hi
  double energy = 0.0;
};

struct SpectrumStats {
  double total_energy = 0.0;
  std::vector<BandEnergy> bands;
  double dc_value = 0.0;

  /// Share of non-DC energy that falls in the lowest `count` bands.
  double ac_share_below(std::size_t count) const;

  /// key=value lines: total_energy, dc_value, n_bands, then band.<i>.lo/hi/energy.
  std::string to_key_value() const;
};

/// Radial frequency of bin (u, v) in cycles/sample after centering DC.
double radial_frequency(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

/// Largest radial frequency present on an H x W grid.
double max_radial_frequency(std::size_t height, std::size_t width);

/// Band index in [0, n_bands) of bin (u, v): equal-width annuli from DC to the
/// largest radial frequency on the grid.
std::size_t band_of(std::size_t u, std::size_t v, std::size_t height, std::size_t width,
                    std::size_t n_bands);

/// Per-band |F|^2 sums over n_bands equal-width radial annuli.
SpectrumStats spectrum_stats(const ComplexField& field, std::size_t n_bands);

}  // namespace lfm
