#include "lfm/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace lfm {

using cd = std::complex<double>;

ComplexField::ComplexField(std::size_t height, std::size_t width, std::vector<cd> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height_ * width_) {
    throw DimensionError("complex field data length does not match " + std::to_string(height_) +
                         "x" + std::to_string(width_));
  }
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// exp(sign * 2 pi i k / n) for k in [0, n).
std::vector<cd> twiddles(std::size_t n, double sign) {
  std::vector<cd> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    w[k] = cd(std::cos(angle), std::sin(angle));
  }
  return w;
}

class LineTransform {
 public:
  LineTransform(std::size_t n, bool inverse, bool fast)
      : n_(n), fast_(fast), table_(twiddles(n, inverse ? 1.0 : -1.0)), scratch_(n) {
    if (fast_) {
      bitrev_.resize(n);
      std::size_t bits = 0;
      while ((std::size_t{1} << bits) < n) ++bits;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
        bitrev_[i] = r;
      }
    }
  }

  // Transforms n values read/written with the given element stride.
  void operator()(cd* line, std::size_t stride) {
    if (fast_) {
      radix2(line, stride);
    } else {
      direct(line, stride);
    }
  }

 private:
  void direct(cd* line, std::size_t stride) {
    for (std::size_t u = 0; u < n_; ++u) {
      cd acc(0.0, 0.0);
      std::size_t k = 0;  // (u * a) mod n
      for (std::size_t a = 0; a < n_; ++a) {
        acc += line[a * stride] * table_[k];
        k += u;
        if (k >= n_) k -= n_;
      }
      scratch_[u] = acc;
    }
    for (std::size_t u = 0; u < n_; ++u) line[u * stride] = scratch_[u];
  }

  void radix2(cd* line, std::size_t stride) {
    for (std::size_t i = 0; i < n_; ++i) scratch_[bitrev_[i]] = line[i * stride];
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const cd t = table_[j * step] * scratch_[start + j + half];
          const cd u = scratch_[start + j];
          scratch_[start + j] = u + t;
          scratch_[start + j + half] = u - t;
        }
      }
    }
    for (std::size_t i = 0; i < n_; ++i) line[i * stride] = scratch_[i];
  }

  std::size_t n_;
  bool fast_;
  std::vector<cd> table_;
  std::vector<cd> scratch_;
  std::vector<std::size_t> bitrev_;
};

bool use_fast_path(std::size_t h, std::size_t w, TransformPath path) {
  switch (path) {
    case TransformPath::reference:
      return false;
    case TransformPath::radix2:
      if (!is_power_of_two(h) || !is_power_of_two(w)) {
        throw ArgumentError("radix-2 transform requires power-of-two sides, got " +
                            std::to_string(h) + "x" + std::to_string(w));
      }
      return true;
    case TransformPath::automatic:
      return is_power_of_two(h) && is_power_of_two(w);
  }
  return false;
}

// In-place unnormalized 2D transform: rows then columns.
void transform2d(std::vector<cd>& data, std::size_t h, std::size_t w, bool inverse,
                 TransformPath path) {
  const bool fast = use_fast_path(h, w, path);
  LineTransform rows(w, inverse, fast);
  for (std::size_t r = 0; r < h; ++r) rows(data.data() + r * w, 1);
  LineTransform cols(h, inverse, fast);
  for (std::size_t c = 0; c < w; ++c) cols(data.data() + c, w);
}

}  // namespace

ComplexField dft2(const Image& image, TransformPath path) {
  if (image.height() == 0 || image.width() == 0) {
    throw DimensionError("dft2 of an empty image");
  }
  std::vector<cd> data(image.pixels().begin(), image.pixels().end());
  transform2d(data, image.height(), image.width(), false, path);
  return ComplexField(image.height(), image.width(), std::move(data));
}

ComplexField dft2(const ComplexField& field, TransformPath path) {
  if (field.height() == 0 || field.width() == 0) {
    throw DimensionError("dft2 of an empty field");
  }
  std::vector<cd> data = field.data();
  transform2d(data, field.height(), field.width(), false, path);
  return ComplexField(field.height(), field.width(), std::move(data));
}

InverseResult idft2(const ComplexField& field, TransformPath path) {
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  if (h == 0 || w == 0 || field.data().size() != h * w) {
    throw DimensionError("idft2 of a malformed field");
  }
  std::vector<cd> data = field.data();
  transform2d(data, h, w, true, path);
  const double scale = 1.0 / static_cast<double>(h * w);
  InverseResult result{Image(h, w), 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    result.image.pixels()[i] = data[i].real() * scale;
    result.max_imag_residual = std::max(result.max_imag_residual, std::abs(data[i].imag() * scale));
  }
  return result;
}

Image embed_kernel(const Kernel& kernel, std::size_t height, std::size_t width) {
  if (kernel.m() > std::min(height, width)) {
    throw DimensionError("kernel size " + std::to_string(kernel.m()) + " exceeds image " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  Image out(height, width);
  const long r = static_cast<long>(kernel.radius());
  const long h = static_cast<long>(height);
  const long w = static_cast<long>(width);
  for (long dy = -r; dy <= r; ++dy) {
    for (long dx = -r; dx <= r; ++dx) {
      const auto y = static_cast<std::size_t>(((dy % h) + h) % h);
      const auto x = static_cast<std::size_t>(((dx % w) + w) % w);
      out(y, x) = kernel.at(dy, dx);
    }
  }
  return out;
}

Image filter_spectral(const Image& image, const Kernel& kernel, TransformPath path) {
  if (image.empty()) throw DimensionError("filter_spectral of an empty image");
  ComplexField spectrum = dft2(image, path);
  const ComplexField response = dft2(embed_kernel(kernel, image.height(), image.width()), path);
  for (std::size_t i = 0; i < spectrum.data().size(); ++i) {
    spectrum.data()[i] *= response.data()[i];
  }
  return idft2(spectrum, path).image;
}

double radial_frequency(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  const auto centered = [](std::size_t k, std::size_t n) {
    const double s = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    return s / static_cast<double>(n);
  };
  const double fu = centered(u, height);
  const double fv = centered(v, width);
  return std::sqrt(fu * fu + fv * fv);
}

double max_radial_frequency(std::size_t height, std::size_t width) {
  return radial_frequency(height / 2, width / 2, height, width);
}

std::size_t band_of(std::size_t u, std::size_t v, std::size_t height, std::size_t width,
                    std::size_t n_bands) {
  const double rmax = max_radial_frequency(height, width);
  if (rmax <= 0.0) return 0;
  const double pos = radial_frequency(u, v, height, width) / rmax * static_cast<double>(n_bands);
  const auto b = static_cast<std::size_t>(pos);
  return std::min(b, n_bands - 1);
}

SpectrumStats spectrum_stats(const ComplexField& field, std::size_t n_bands) {
  if (n_bands == 0) throw ArgumentError("spectrum_stats needs at least one band");
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  if (h == 0 || w == 0) throw DimensionError("spectrum_stats of an empty field");

  SpectrumStats stats;
  const double rmax = max_radial_frequency(h, w);
  stats.bands.resize(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    stats.bands[b].lo = rmax * static_cast<double>(b) / static_cast<double>(n_bands);
    stats.bands[b].hi = rmax * static_cast<double>(b + 1) / static_cast<double>(n_bands);
  }
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const double e = std::norm(field(u, v));
      stats.total_energy += e;
      stats.bands[band_of(u, v, h, w, n_bands)].energy += e;
    }
  }
  stats.dc_value = field(0, 0).real();
  return stats;
}

double SpectrumStats::ac_share_below(std::size_t count) const {
  const double dc_energy = dc_value * dc_value;
  const double ac_total = total_energy - dc_energy;
  if (ac_total <= 0.0) return 1.0;
  double low = -dc_energy;
  for (std::size_t b = 0; b < std::min(count, bands.size()); ++b) low += bands[b].energy;
  return low / ac_total;
}

std::string SpectrumStats::to_key_value() const {
  std::ostringstream os;
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "total_energy=" << num(total_energy) << '\n';
  os << "dc_value=" << num(dc_value) << '\n';
  os << "n_bands=" << bands.size() << '\n';
  for (std::size_t b = 0; b < bands.size(); ++b) {
    os << "band." << b << ".lo=" << num(bands[b].lo) << '\n';
    os << "band." << b << ".hi=" << num(bands[b].hi) << '\n';
    os << "band." << b << ".energy=" << num(bands[b].energy) << '\n';
  }
  return os.str();
}

}  // namespace lfm
