#include <doctest.h>

#include <cmath>
#include <complex>

#include "lfm/filters.hpp"
#include "lfm/spectral.hpp"
#include "test_support.hpp"

using namespace lfm;
using lfm::testing::random_image;

TEST_CASE("dft2 of a 2x2 image matches the hand-summed definition") {
  const Image x(2, 2, std::vector<double>{1, 2, 3, 4});
  const ComplexField f = dft2(x);
  CHECK(std::abs(f(0, 0) - std::complex<double>(10, 0)) < 1e-14);
  CHECK(std::abs(f(0, 1) - std::complex<double>(-2, 0)) < 1e-14);
  CHECK(std::abs(f(1, 0) - std::complex<double>(-4, 0)) < 1e-14);
  CHECK(std::abs(f(1, 1)) < 1e-14);
}

TEST_CASE("dft2 of a constant image is DC only") {
  const double c = 0.37;
  const Image x(6, 10, c);
  const ComplexField f = dft2(x);
  CHECK(std::abs(f(0, 0).real() - c * 60) < 1e-12);
  for (std::size_t u = 0; u < 6; ++u) {
    for (std::size_t v = 0; v < 10; ++v) {
      if (u == 0 && v == 0) continue;
      CHECK(std::abs(f(u, v)) < 1e-12);
    }
  }
}

TEST_CASE("dft2 agrees with brute-force summation on odd and even sizes") {
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{5, 7}, {8, 8}, {3, 16}, {1, 9}}) {
    const Image x = random_image(h, w, 100 + h * w);
    const auto oracle = lfm::testing::brute_force_dft(x);
    const ComplexField f = dft2(x);
    double err = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) err = std::max(err, std::abs(f.data()[i] - oracle[i]));
    CHECK(err < 1e-11);
  }
}

TEST_CASE("radix-2 path matches the reference path") {
  for (std::size_t n : {2u, 4u, 16u, 64u}) {
    const Image x = random_image(n, n / 2 == 0 ? 1 : n / 2, 7 + n);
    const ComplexField a = dft2(x, TransformPath::reference);
    const ComplexField b = dft2(x, TransformPath::radix2);
    double err = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) err = std::max(err, std::abs(a.data()[i] - b.data()[i]));
    CHECK(err < 1e-10);
  }
  CHECK_THROWS_AS(dft2(Image(6, 8), TransformPath::radix2), ArgumentError);
}

TEST_CASE("dft2 rejects an empty image") {
  CHECK_THROWS_AS(dft2(Image()), DimensionError);
}

TEST_CASE("Parseval holds on a random 8x8 image") {
  const Image x = random_image(8, 8, 3);
  const ComplexField f = dft2(x);
  double spatial = 0.0, spectral = 0.0;
  for (double v : x.pixels()) spatial += v * v;
  for (const auto& c : f.data()) spectral += std::norm(c);
  spectral /= 64.0;
  CHECK(std::abs(spatial - spectral) <= 1e-9 * spatial);
}

TEST_CASE("conjugate symmetry for real input") {
  const Image x = random_image(12, 9, 5);
  const ComplexField f = dft2(x);
  for (std::size_t u = 0; u < 12; ++u) {
    for (std::size_t v = 0; v < 9; ++v) {
      CHECK(std::abs(f(u, v) - std::conj(f((12 - u) % 12, (9 - v) % 9))) < 1e-12);
    }
  }
}

TEST_CASE("linearity of dft2") {
  const Image x = random_image(10, 10, 11);
  const Image y = random_image(10, 10, 12);
  const double a = 1.7, b = -0.4;
  Image z(10, 10);
  for (std::size_t i = 0; i < z.size(); ++i) z.pixels()[i] = a * x.pixels()[i] + b * y.pixels()[i];
  const ComplexField fx = dft2(x), fy = dft2(y), fz = dft2(z);
  double err = 0.0;
  for (std::size_t i = 0; i < fz.data().size(); ++i) {
    err = std::max(err, std::abs(fz.data()[i] - (a * fx.data()[i] + b * fy.data()[i])));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("idft2 inverts dft2") {
  SUBCASE("random 16x16") {
    const Image x = random_image(16, 16, 21);
    const InverseResult r = idft2(dft2(x));
    CHECK(lfm::testing::max_abs_diff(r.image, x) < 1e-10);
    CHECK(r.max_imag_residual < 1e-9);
  }
  SUBCASE("non power-of-two") {
    const Image x = random_image(9, 14, 22);
    CHECK(lfm::testing::max_abs_diff(idft2(dft2(x)).image, x) < 1e-10);
  }
  SUBCASE("all-zero field") {
    const InverseResult r = idft2(ComplexField(4, 5));
    for (double v : r.image.pixels()) CHECK(v == 0.0);
  }
  SUBCASE("DC-only field inverts to ones") {
    ComplexField f(4, 6);
    f(0, 0) = 24.0;
    const InverseResult r = idft2(f);
    for (double v : r.image.pixels()) CHECK(std::abs(v - 1.0) < 1e-15);
  }
}

TEST_CASE("embedded kernel is centered at the origin with wrapped taps") {
  const Kernel k = gaussian_kernel(3);
  const Image e = embed_kernel(k, 5, 6);
  CHECK(e(0, 0) == k.at(0, 0));
  CHECK(e(4, 0) == k.at(-1, 0));
  CHECK(e(0, 5) == k.at(0, -1));
  CHECK(e(1, 1) == k.at(1, 1));
  CHECK(e(2, 2) == 0.0);
}

TEST_CASE("filter_spectral equals circular spatial convolution") {
  for (std::size_t m : {3u, 5u, 7u}) {
    const Kernel k = gaussian_kernel(m);
    const Image x = random_image(16, 16, 40 + m);
    const Image oracle = lfm::testing::circular_convolution(x, k);
    CHECK(lfm::testing::max_abs_diff(filter_spectral(x, k), oracle) < 1e-10);
    CHECK(lfm::testing::max_abs_diff(filter_spectral(x, k, TransformPath::reference), oracle) < 1e-10);
  }
}

TEST_CASE("filter_spectral keeps a constant image with unit DC gain") {
  const Image x(8, 12, 0.42);
  const Image y = filter_spectral(x, gaussian_kernel(3));
  CHECK(lfm::testing::max_abs_diff(x, y) < 1e-12);
}

TEST_CASE("filter_spectral strongly attenuates the Nyquist checkerboard") {
  const Image cb = nyquist_checkerboard(16, 16);
  const Image y = filter_spectral(cb, gaussian_kernel(3));
  CHECK(sum_of_squares(y) < 0.1 * sum_of_squares(cb));
}

TEST_CASE("filter_spectral rejects kernels larger than the image") {
  CHECK_THROWS_AS(filter_spectral(Image(4, 8), gaussian_kernel(5)), DimensionError);
}

TEST_CASE("spectrum_stats band partition") {
  SUBCASE("DC only") {
    const SpectrumStats s = spectrum_stats(dft2(Image(8, 8, 1.0)), 4);
    CHECK(s.bands[0].energy == doctest::Approx(s.total_energy));
    for (std::size_t b = 1; b < 4; ++b) CHECK(s.bands[b].energy == 0.0);
    CHECK(s.dc_value == doctest::Approx(64.0));
  }
  SUBCASE("checkerboard lands in the outermost band") {
    const SpectrumStats s = spectrum_stats(dft2(nyquist_checkerboard(16, 16)), 8);
    CHECK(s.bands[7].energy == doctest::Approx(s.total_energy));
    for (std::size_t b = 0; b < 7; ++b) CHECK(s.bands[b].energy < 1e-18);
  }
  SUBCASE("bands sum to total") {
    for (std::size_t n : {1u, 3u, 8u, 13u}) {
      const SpectrumStats s = spectrum_stats(dft2(random_image(11, 16, n)), n);
      double sum = 0.0;
      for (const auto& b : s.bands) sum += b.energy;
      CHECK(std::abs(sum - s.total_energy) <= 1e-9 * s.total_energy);
      CHECK(s.bands.size() == n);
    }
  }
  CHECK_THROWS_AS(spectrum_stats(dft2(Image(4, 4, 1.0)), 0), ArgumentError);
}

TEST_CASE("spectrum_stats serializes as key=value lines") {
  const SpectrumStats s = spectrum_stats(dft2(Image(4, 4, 1.0)), 2);
  const std::string text = s.to_key_value();
  CHECK(text.find("total_energy=256\n") != std::string::npos);
  CHECK(text.find("n_bands=2\n") != std::string::npos);
  CHECK(text.find("band.1.energy=0\n") != std::string::npos);
}
