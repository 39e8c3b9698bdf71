#include "lfm/filters.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace lfm {

std::string_view to_string(Normalization n) {
  return n == Normalization::unit_sum ? "unit_sum" : "unnormalized_eq2";
}

std::string_view to_string(PaddingMode p) {
  switch (p) {
    case PaddingMode::zero: return "zero";
    case PaddingMode::reflect: return "reflect";
    case PaddingMode::circular: return "circular";
  }
  return "?";
}

Normalization parse_normalization(std::string_view s) {
  if (s == "unit_sum") return Normalization::unit_sum;
  if (s == "unnormalized_eq2") return Normalization::unnormalized_eq2;
  throw ArgumentError("unknown normalization '" + std::string(s) + "'");
}

PaddingMode parse_padding(std::string_view s) {
  if (s == "zero") return PaddingMode::zero;
  if (s == "reflect") return PaddingMode::reflect;
  if (s == "circular") return PaddingMode::circular;
  throw ArgumentError("unknown padding mode '" + std::string(s) + "'");
}

Kernel::Kernel(std::size_t m, std::vector<double> taps, Normalization normalization, double sigma)
    : m_(m), taps_(std::move(taps)), normalization_(normalization), sigma_(sigma) {
  if (m_ == 0 || m_ % 2 == 0) {
    throw ArgumentError("kernel size must be odd, got " + std::to_string(m_));
  }
  if (taps_.size() != m_ * m_) {
    throw DimensionError("kernel of size " + std::to_string(m_) + " needs " +
                         std::to_string(m_ * m_) + " taps, got " + std::to_string(taps_.size()));
  }
}

double Kernel::sum() const {
  double s = 0.0;
  for (double t : taps_) s += t;
  return s;
}

Kernel Kernel::identity(std::size_t m) {
  std::vector<double> taps(m * m, 0.0);
  if (m % 2 == 1) taps[(m / 2) * m + m / 2] = 1.0;
  return Kernel(m, std::move(taps), Normalization::unit_sum);
}

Kernel gaussian_kernel(std::size_t m, Normalization normalization) {
  if (m < 3 || m % 2 == 0) {
    throw ArgumentError("Gaussian kernel size m must be odd and >= 3, got " + std::to_string(m));
  }
  const long r = static_cast<long>(m / 2);
  const double s = static_cast<double>(r);
  const double two_s2 = 2.0 * s * s;

  std::vector<double> taps(m * m);
  std::vector<double> factor(m);
  for (long y = -r; y <= r; ++y) {
    for (long x = -r; x <= r; ++x) {
      const double d2 = static_cast<double>(x * x + y * y);
      taps[static_cast<std::size_t>((y + r) * static_cast<long>(m) + (x + r))] =
          std::exp(-d2 / two_s2) / (2.0 * std::numbers::pi * s * s);
    }
    factor[static_cast<std::size_t>(y + r)] =
        std::exp(-static_cast<double>(y * y) / two_s2) / (std::sqrt(2.0 * std::numbers::pi) * s);
  }

  if (normalization == Normalization::unit_sum) {
    double total = 0.0;
    for (double t : taps) total += t;
    for (double& t : taps) t /= total;
    double ftotal = 0.0;
    for (double g : factor) ftotal += g;
    for (double& g : factor) g /= ftotal;
  }

  Kernel k(m, std::move(taps), normalization, s);
  k.factor_ = std::move(factor);
  return k;
}

long resolve_index(long i, long n, PaddingMode padding) {
  if (i >= 0 && i < n) return i;
  switch (padding) {
    case PaddingMode::zero:
      return -1;
    case PaddingMode::circular:
      return ((i % n) + n) % n;
    case PaddingMode::reflect: {
      if (n == 1) return 0;
      const long period = 2 * (n - 1);
      long j = ((i % period) + period) % period;
      return j < n ? j : period - j;
    }
  }
  return -1;
}

void check_convolution_args(std::size_t height, std::size_t width, const Kernel& kernel,
                            PaddingMode padding, std::size_t stride) {
  if (stride == 0) throw ArgumentError("stride must be >= 1");
  if (height == 0 || width == 0) throw DimensionError("cannot filter an empty plane");
  if (padding != PaddingMode::zero && kernel.m() > std::min(height, width)) {
    throw DimensionError("kernel size " + std::to_string(kernel.m()) + " exceeds plane " +
                         std::to_string(height) + "x" + std::to_string(width) + " under " +
                         std::string(to_string(padding)) + " padding");
  }
}

namespace {

// index_table[o * m + t] = resolved input index for output o and tap t, or -1.
std::vector<long> index_table(std::size_t n, std::size_t m, PaddingMode padding,
                              std::size_t stride) {
  const std::size_t out_n = strided_extent(n, stride);
  const long r = static_cast<long>(m / 2);
  std::vector<long> table(out_n * m);
  for (std::size_t o = 0; o < out_n; ++o) {
    for (std::size_t t = 0; t < m; ++t) {
      const long i = static_cast<long>(o * stride) + static_cast<long>(t) - r;
      table[o * m + t] = resolve_index(i, static_cast<long>(n), padding);
    }
  }
  return table;
}

}  // namespace

template <typename T>
void correlate_plane(std::span<const T> in, std::size_t height, std::size_t width,
                     const Kernel& kernel, PaddingMode padding, std::size_t stride,
                     std::span<T> out) {
  check_convolution_args(height, width, kernel, padding, stride);
  const std::size_t m = kernel.m();
  const std::size_t out_h = strided_extent(height, stride);
  const std::size_t out_w = strided_extent(width, stride);
  if (in.size() != height * width || out.size() != out_h * out_w) {
    throw DimensionError("correlate_plane: buffer sizes do not match plane geometry");
  }
  const auto rows = index_table(height, m, padding, stride);
  const auto cols = index_table(width, m, padding, stride);
  std::vector<T> taps(kernel.taps().begin(), kernel.taps().end());

  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      T acc{0};
      for (std::size_t ty = 0; ty < m; ++ty) {
        const long y = rows[i * m + ty];
        if (y < 0) continue;
        const T* row = in.data() + static_cast<std::size_t>(y) * width;
        const T* k = taps.data() + ty * m;
        for (std::size_t tx = 0; tx < m; ++tx) {
          const long x = cols[j * m + tx];
          if (x < 0) continue;
          acc += k[tx] * row[x];
        }
      }
      out[i * out_w + j] = acc;
    }
  }
}

template <typename T>
void correlate_plane_adjoint(std::span<const T> grad_out, std::size_t height, std::size_t width,
                             const Kernel& kernel, PaddingMode padding, std::size_t stride,
                             std::span<T> grad_in) {
  check_convolution_args(height, width, kernel, padding, stride);
  const std::size_t m = kernel.m();
  const std::size_t out_h = strided_extent(height, stride);
  const std::size_t out_w = strided_extent(width, stride);
  if (grad_in.size() != height * width || grad_out.size() != out_h * out_w) {
    throw DimensionError("correlate_plane_adjoint: buffer sizes do not match plane geometry");
  }
  const auto rows = index_table(height, m, padding, stride);
  const auto cols = index_table(width, m, padding, stride);
  std::vector<T> taps(kernel.taps().begin(), kernel.taps().end());

  std::fill(grad_in.begin(), grad_in.end(), T{0});
  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      const T g = grad_out[i * out_w + j];
      for (std::size_t ty = 0; ty < m; ++ty) {
        const long y = rows[i * m + ty];
        if (y < 0) continue;
        T* row = grad_in.data() + static_cast<std::size_t>(y) * width;
        const T* k = taps.data() + ty * m;
        for (std::size_t tx = 0; tx < m; ++tx) {
          const long x = cols[j * m + tx];
          if (x < 0) continue;
          row[x] += k[tx] * g;
        }
      }
    }
  }
}

template void correlate_plane<float>(std::span<const float>, std::size_t, std::size_t,
                                     const Kernel&, PaddingMode, std::size_t, std::span<float>);
template void correlate_plane<double>(std::span<const double>, std::size_t, std::size_t,
                                      const Kernel&, PaddingMode, std::size_t, std::span<double>);
template void correlate_plane_adjoint<float>(std::span<const float>, std::size_t, std::size_t,
                                             const Kernel&, PaddingMode, std::size_t,
                                             std::span<float>);
template void correlate_plane_adjoint<double>(std::span<const double>, std::size_t, std::size_t,
                                              const Kernel&, PaddingMode, std::size_t,
                                              std::span<double>);

Image convolve2d(const Image& image, const Kernel& kernel, PaddingMode padding,
                 std::size_t stride) {
  check_convolution_args(image.height(), image.width(), kernel, padding, stride);
  Image out(strided_extent(image.height(), stride), strided_extent(image.width(), stride));
  correlate_plane<double>(image.pixels(), image.height(), image.width(), kernel, padding, stride,
                          out.pixels());
  return out;
}

Image convolve2d_separable(const Image& image, const Kernel& kernel, PaddingMode padding,
                           std::size_t stride) {
  if (!kernel.separable()) throw ArgumentError("kernel has no separable factorization");
  check_convolution_args(image.height(), image.width(), kernel, padding, stride);
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t m = kernel.m();
  const std::size_t out_h = strided_extent(h, stride);
  const std::size_t out_w = strided_extent(w, stride);
  const auto& g = kernel.separable_factor();
  const auto rows = index_table(h, m, padding, stride);
  const auto cols = index_table(w, m, padding, stride);

  // horizontal pass at sampled columns, every input row
  Image horiz(h, out_w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        const long x = cols[j * m + t];
        if (x >= 0) acc += g[t] * image(y, static_cast<std::size_t>(x));
      }
      horiz(y, j) = acc;
    }
  }
  Image out(out_h, out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        const long y = rows[i * m + t];
        if (y >= 0) acc += g[t] * horiz(static_cast<std::size_t>(y), j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Image lowpass(const Image& image, std::size_t m, PaddingMode padding,
              Normalization normalization) {
  return convolve2d(image, gaussian_kernel(m, normalization), padding, 1);
}

Image highpass(const Image& image, std::size_t m, PaddingMode padding,
               Normalization normalization) {
  Image low = lowpass(image, m, padding, normalization);
  Image out(image.height(), image.width());
  for (std::size_t i = 0; i < image.size(); ++i) out.pixels()[i] = image.pixels()[i] - low.pixels()[i];
  return out;
}

double total_variation_circular(const Image& image) {
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  double tv = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      tv += std::abs(image(r, (c + 1) % w) - image(r, c));
      tv += std::abs(image((r + 1) % h, c) - image(r, c));
    }
  }
  return tv;
}

Image circular_shift(const Image& image, long dy, long dx) {
  const long h = static_cast<long>(image.height());
  const long w = static_cast<long>(image.width());
  Image out(image.height(), image.width());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const long sr = (((r - dy) % h) + h) % h;
      const long sc = (((c - dx) % w) + w) % w;
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
          image(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
    }
  }
  return out;
}

}  // namespace lfm
